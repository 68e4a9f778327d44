//! The session protocol: one JSON request per message, dispatched on its
//! `method` field. The wire format is described by
//! `protocol/session.schema.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use flowers::bridge::{encode, parse_formula_inferring};
use flowers::calculus::parse_instance;
use flowers::context::Path;
use flowers::syntax::{parse_bouquet, parse_bouquet_inferring, Signature};

use crate::session::{Session, SessionError};

pub const PROTOCOL_VERSION: u32 = 1;

pub const METHODS: [&str; 6] = ["new", "state", "actions", "apply", "undo", "export"];

pub const ERROR_CODES: [&str; 9] = [
    "BadSession",
    "StaleAction",
    "UnknownAction",
    "SideConditionViolated",
    "BadInstance",
    "NothingToUndo",
    "NotProved",
    "BadRequest",
    "UnknownMethod",
];

#[derive(Clone, Debug, Deserialize)]
pub struct Request {
    #[serde(default)]
    pub id: Value,
    pub method: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Response {
    pub id: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Deserialize)]
struct NewParams {
    goal: String,
    #[serde(default)]
    sig: Option<String>,
    #[serde(default)]
    formula: bool,
}

#[derive(Deserialize)]
struct SessionParams {
    session: String,
    #[serde(default)]
    selected: Option<String>,
    #[serde(default)]
    path: Option<String>,
    #[serde(default)]
    action: Option<String>,
    #[serde(default)]
    digest: Option<String>,
    #[serde(default)]
    instance: Option<String>,
}

/// On-disk form of a session: enough to replay it.
#[derive(Serialize, Deserialize, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub version: u32,
    pub id: String,
    pub sig: String,
    pub goal: String,
    pub log: Vec<String>,
}

/// All live sessions. Requests to one session are serialized by its lock;
/// distinct sessions proceed in parallel.
pub struct Service {
    default_sig: Signature,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    next: AtomicU64,
    snapshots: Option<PathBuf>,
}

fn bad(msg: impl ToString) -> SessionError {
    SessionError::BadRequest(msg.to_string())
}

impl Service {
    pub fn new(default_sig: Signature) -> Self {
        Service {
            default_sig,
            sessions: Mutex::new(BTreeMap::new()),
            next: AtomicU64::new(1),
            snapshots: None,
        }
    }

    /// Persists every session's action log under `dir` and restores the
    /// sessions already there.
    pub fn with_snapshots(default_sig: Signature, dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        let svc = Service {
            snapshots: Some(dir.clone()),
            ..Service::new(default_sig)
        };
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for p in entries {
            let snap: Snapshot = serde_json::from_str(&fs::read_to_string(&p)?)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", p.display())))?;
            let s = restore(&snap).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", p.display())))?;
            if let Some(n) = snap.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                svc.next.fetch_max(n + 1, Ordering::Relaxed);
            }
            svc.sessions
                .lock()
                .expect("sessions lock")
                .insert(snap.id.clone(), Arc::new(Mutex::new(s)));
        }
        Ok(svc)
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.lock().expect("sessions lock").keys().cloned().collect()
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::BadSession(id.to_string()))
    }

    fn persist(&self, s: &Session) {
        let Some(dir) = &self.snapshots else { return };
        let snap = Snapshot {
            version: PROTOCOL_VERSION,
            id: s.id.clone(),
            sig: s.signature.to_compact(),
            goal: s.goal.to_string(),
            log: s.log().iter().map(ToString::to_string).collect(),
        };
        let text = serde_json::to_string_pretty(&snap).expect("snapshot serializes");
        let tmp = dir.join(format!("{}.json.tmp", s.id));
        if fs::write(&tmp, text).is_ok() {
            let _ = fs::rename(&tmp, dir.join(format!("{}.json", s.id)));
        }
    }

    /// Handles one request line; malformed JSON yields a BadRequest reply.
    pub fn handle_line(&self, line: &str) -> String {
        let resp = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(&req),
            Err(e) => Response {
                id: Value::Null,
                result: None,
                error: Some(ErrorBody {
                    code: "BadRequest".into(),
                    message: e.to_string(),
                }),
            },
        };
        serde_json::to_string(&resp).expect("response serializes")
    }

    pub fn handle(&self, req: &Request) -> Response {
        match self.dispatch(req) {
            Ok(result) => Response {
                id: req.id.clone(),
                result: Some(result),
                error: None,
            },
            Err(e) => Response {
                id: req.id.clone(),
                result: None,
                error: Some(ErrorBody {
                    code: e.code().into(),
                    message: e.to_string(),
                }),
            },
        }
    }

    fn dispatch(&self, req: &Request) -> Result<Value, SessionError> {
        if req.method == "new" {
            let p: NewParams = serde_json::from_value(req.params.clone()).map_err(bad)?;
            return self.new_session(p);
        }
        if !METHODS.contains(&req.method.as_str()) {
            return Err(SessionError::UnknownMethod(req.method.clone()));
        }
        let p: SessionParams = serde_json::from_value(req.params.clone()).map_err(bad)?;
        let handle = self.get(&p.session)?;
        let mut s = handle.lock().expect("session lock");
        let path = |t: &Option<String>| -> Result<Option<Path>, SessionError> {
            t.as_deref().map(|t| t.parse::<Path>().map_err(bad)).transpose()
        };
        match req.method.as_str() {
            "state" => Ok(json!(s.state(path(&p.selected)?.as_ref()))),
            "actions" => {
                let at = path(&p.path)?;
                Ok(json!({ "digest": s.digest(), "actions": s.actions(at.as_ref()) }))
            }
            "apply" => {
                match (&p.action, &p.digest, &p.instance) {
                    (Some(a), _, _) => s.apply_action(a)?,
                    (None, Some(d), Some(i)) => s.apply_text(d, i)?,
                    _ => return Err(bad("apply needs `action`, or `digest` and `instance`")),
                }
                self.persist(&s);
                Ok(json!(s.state(None)))
            }
            "undo" => {
                s.undo()?;
                self.persist(&s);
                Ok(json!(s.state(None)))
            }
            "export" => Ok(json!({ "proof": s.export()? })),
            _ => unreachable!("methods checked above"),
        }
    }

    fn new_session(&self, p: NewParams) -> Result<Value, SessionError> {
        let mut sig = self.default_sig.clone();
        if let Some(extra) = &p.sig {
            let extra = Signature::parse_compact(extra).map_err(bad)?;
            sig.merge(&extra).map_err(bad)?;
        }
        let (goal, sig) = if p.formula {
            let (f, sig) = parse_formula_inferring(&p.goal, &sig).map_err(bad)?;
            (encode(&f), sig)
        } else {
            parse_bouquet_inferring(&p.goal, &sig).map_err(bad)?
        };
        let id = format!("s{}", self.next.fetch_add(1, Ordering::Relaxed));
        let s = Session::new(id.clone(), &goal, sig);
        let view = s.state(None);
        self.persist(&s);
        self.sessions
            .lock()
            .expect("sessions lock")
            .insert(id, Arc::new(Mutex::new(s)));
        Ok(json!({ "version": PROTOCOL_VERSION, "state": view }))
    }
}

fn restore(snap: &Snapshot) -> Result<Session, String> {
    let sig = Signature::parse_compact(&snap.sig).map_err(|e| e.to_string())?;
    let goal = parse_bouquet(&snap.goal, &sig).map_err(|e| e.to_string())?;
    let mut s = Session::new(snap.id.clone(), &goal, sig);
    for (n, line) in snap.log.iter().enumerate() {
        let inst = parse_instance(line, &s.signature)?;
        s.apply_instance(inst).map_err(|e| format!("step {n}: {e}"))?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(svc: &Service, method: &str, params: Value) -> Value {
        let line = json!({"id": 1, "method": method, "params": params}).to_string();
        serde_json::from_str(&svc.handle_line(&line)).unwrap()
    }

    #[test]
    fn errors_have_codes() {
        let svc = Service::new(Signature::new());
        assert_eq!(call(&svc, "state", json!({"session": "nope"}))["error"]["code"], "BadSession");
        assert_eq!(call(&svc, "frobnicate", json!({}))["error"]["code"], "UnknownMethod");
        assert_eq!(call(&svc, "new", json!({"goal": "[a |>"}))["error"]["code"], "BadRequest");
        let v: Value = serde_json::from_str(&svc.handle_line("{not json")).unwrap();
        assert_eq!(v["error"]["code"], "BadRequest");
    }

    #[test]
    fn formula_goals() {
        let svc = Service::new(Signature::new());
        let r = call(&svc, "new", json!({"goal": "a -> a", "formula": true}));
        assert_eq!(r["result"]["state"]["bouquet"], "[a |> a]");
        assert_eq!(r["result"]["version"], 1);
    }

    #[test]
    fn every_error_code_is_listed() {
        for e in [
            SessionError::BadSession(String::new()),
            SessionError::NothingToUndo,
            SessionError::NotProved,
            SessionError::UnknownAction(String::new()),
            SessionError::BadRequest(String::new()),
            SessionError::UnknownMethod(String::new()),
            SessionError::StaleAction {
                listed: String::new(),
                current: String::new(),
            },
        ] {
            assert!(ERROR_CODES.contains(&e.code()));
        }
    }
}
