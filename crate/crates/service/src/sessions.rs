//! In-memory scenario sessions.
//!
//! The map lock is held only to look up, insert or drop an entry. Each
//! session has its own lock, so scenario posts to one session never wait on
//! another, and comparisons within a session can read concurrently.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use testrisk_core::{Plan, PlanDocument, Scenario};
use uuid::Uuid;

pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 60 * 60);

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub document: PlanDocument,
    pub base: Arc<Plan>,
    pub scenarios: BTreeMap<String, Scenario>,
    pub created_at: Instant,
    last_touched: Mutex<Instant>,
}

impl Session {
    fn touch(&self, now: Instant) {
        *self.last_touched.lock().expect("touch lock") = now;
    }

    pub fn last_touched(&self) -> Instant {
        *self.last_touched.lock().expect("touch lock")
    }

    fn expired(&self, now: Instant, ttl: Duration) -> bool {
        now.saturating_duration_since(self.last_touched()) > ttl
    }
}

pub type SessionHandle = Arc<RwLock<Session>>;

#[derive(Debug)]
pub struct SessionStore {
    ttl: Duration,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(DEFAULT_TTL)
    }
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self { ttl, sessions: RwLock::new(HashMap::new()) }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn create(&self, document: PlanDocument, base: Plan) -> String {
        let id = Uuid::new_v4().simple().to_string();
        let now = Instant::now();
        let session = Session {
            id: id.clone(),
            document,
            base: Arc::new(base),
            scenarios: BTreeMap::new(),
            created_at: now,
            last_touched: Mutex::new(now),
        };
        self.sessions.write().expect("session map").insert(id.clone(), Arc::new(RwLock::new(session)));
        id
    }

    /// The live session, touched. Expired sessions are dropped on sight so an
    /// evicted id never yields stale data, even before the sweeper runs.
    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        let now = Instant::now();
        let handle = self.sessions.read().expect("session map").get(id).cloned()?;
        let expired = handle.read().expect("session lock").expired(now, self.ttl);
        if expired {
            self.sessions.write().expect("session map").remove(id);
            return None;
        }
        handle.read().expect("session lock").touch(now);
        Some(handle)
    }

    pub fn remove(&self, id: &str) -> bool {
        self.sessions.write().expect("session map").remove(id).is_some()
    }

    /// Drops every expired session; returns how many went.
    pub fn evict_expired(&self) -> usize {
        let now = Instant::now();
        let mut map = self.sessions.write().expect("session map");
        let before = map.len();
        map.retain(|_, s| !s.read().expect("session lock").expired(now, self.ttl));
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> (PlanDocument, Plan) {
        let doc = PlanDocument::worked_example();
        let plan = doc.to_plan().unwrap();
        (doc, plan)
    }

    #[test]
    fn create_get_remove() {
        let store = SessionStore::default();
        let (doc, base) = plan();
        let id = store.create(doc, base);
        assert!(store.get(&id).is_some());
        assert!(store.remove(&id));
        assert!(store.get(&id).is_none());
        assert!(!store.remove(&id));
    }

    #[test]
    fn ids_are_unique() {
        let store = SessionStore::default();
        let ids: std::collections::HashSet<String> = (0..50)
            .map(|_| {
                let (doc, base) = plan();
                store.create(doc, base)
            })
            .collect();
        assert_eq!(ids.len(), 50);
    }

    #[test]
    fn expired_sessions_vanish() {
        let store = SessionStore::new(Duration::from_millis(20));
        let (doc, base) = plan();
        let stale = store.create(doc.clone(), base.clone());
        std::thread::sleep(Duration::from_millis(40));
        let fresh = store.create(doc, base);
        assert!(store.get(&stale).is_none());
        assert!(store.get(&fresh).is_some());
        std::thread::sleep(Duration::from_millis(40));
        assert_eq!(store.evict_expired(), 1);
        assert!(store.is_empty());
    }
}
