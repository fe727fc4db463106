//! Fetching newspace data from a modular-forms database over HTTP.
//!
//! A query is expanded into one request per `(N, k, chi)` with `chi` a
//! Conrey character of the right parity. Responses are mapped to records
//! through the configured JSON pointers, validated, and only then cached.

use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use num_complex::Complex64;
use serde_json::Value;

use super::cache::{request_key, Cache};
use super::config::{CharacterKind, Config, ValueKind};
use super::dataset::{CharField, CharResolver, DatasetFile, DatasetHeader};
use crate::characters::{CharacterRecord, DirichletCharacter, Parity};
use crate::error::{Error, Result};
use crate::numtheory::{factorize, is_exceptional, is_prime, Prime};
use crate::spectra::EigenRecord;

/// Blocking GET returning the response body.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> std::result::Result<String, String>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        HttpTransport {
            agent: config.into(),
        }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> std::result::Result<String, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }
}

/// Transport for offline runs; every request fails.
pub struct NoNetwork;

impl Transport for NoNetwork {
    fn get(&self, url: &str) -> std::result::Result<String, String> {
        Err(format!("network disabled: {url}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharConstraint {
    /// Every character mod `N` of the parity forced by `k`.
    Any,
    Trivial,
    /// Conrey index `c`, taken mod each level; levels where `gcd(c, N) > 1`
    /// are skipped.
    Conrey(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceQuery {
    pub levels: RangeInclusive<u64>,
    pub weights: RangeInclusive<u32>,
    pub character: CharConstraint,
    pub p: Prime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    pub dataset: DatasetFile,
    /// Spaces skipped without a request, with the reason.
    pub advisories: Vec<String>,
}

#[derive(Debug, Clone)]
struct Request {
    level: u64,
    weight: u32,
    conrey: u64,
    url: String,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prime_index(p: u64) -> u64 {
    (2..p).filter(|&q| is_prime(q)).count() as u64
}

fn fill_p(template: &str, p: u64) -> String {
    template
        .replace("{p}", &p.to_string())
        .replace("{p_index}", &prime_index(p).to_string())
        .replace("{p_minus_1}", &(p - 1).to_string())
}

fn plan(query: &SpaceQuery, cfg: &Config) -> Result<(Vec<Request>, Vec<String>)> {
    let p = query.p.get();
    let mut requests = Vec::new();
    let mut advisories = Vec::new();
    for level in query.levels.clone() {
        if level == 0 {
            return Err(Error::domain("level must be positive"));
        }
        if level % p == 0 {
            advisories.push(format!("N = {level}: p divides N, skipped"));
            continue;
        }
        let conreys: Vec<u64> = match query.character {
            CharConstraint::Trivial => vec![1],
            CharConstraint::Conrey(c) => {
                let c = c % level.max(1);
                let c = if level == 1 { 1 } else { c };
                if gcd(c, level) != 1 {
                    advisories.push(format!(
                        "N = {level}: Conrey index {c} is not a unit, skipped"
                    ));
                    continue;
                }
                vec![c]
            }
            CharConstraint::Any => (1..level.max(2)).filter(|&c| gcd(c, level) == 1).collect(),
        };
        let level_fact = factorize(level)?;
        for weight in query.weights.clone() {
            if weight < 2 {
                return Err(Error::domain(format!(
                    "weight must be at least 2, got {weight}"
                )));
            }
            for &c in &conreys {
                let chi = DirichletCharacter::from_conrey(level, c.max(1))?;
                if chi.parity() != Parity::of_weight(weight) {
                    continue;
                }
                let f = factorize(chi.conductor())?;
                if is_exceptional(&level_fact, &f)? {
                    advisories.push(format!(
                        "{level}.{c} at weight {weight}: conductor {} is even and 2 exactly divides N/f, so dim = 0; no request made",
                        f.n()
                    ));
                    continue;
                }
                let url = fill_p(&cfg.url_template, p)
                    .replace("{endpoint}", &cfg.endpoint)
                    .replace("{N}", &level.to_string())
                    .replace("{k}", &weight.to_string())
                    .replace("{c}", &c.max(1).to_string());
                requests.push(Request {
                    level,
                    weight,
                    conrey: c.max(1),
                    url,
                });
            }
        }
    }
    Ok((requests, advisories))
}

fn pointer<'a>(v: &'a Value, ptr: &str, p: u64) -> Option<&'a Value> {
    v.pointer(&fill_p(ptr, p))
}

fn complex_of(v: &Value) -> Option<Complex64> {
    match v {
        Value::Number(n) => n.as_f64().map(|re| Complex64::new(re, 0.0)),
        Value::Array(a) if a.len() == 2 => Some(Complex64::new(a[0].as_f64()?, a[1].as_f64()?)),
        _ => None,
    }
}

/// Maps one response body to records, or lists every offending element.
fn map_payload(
    req: &Request,
    body: &str,
    cfg: &Config,
    p: Prime,
    chars: &mut CharResolver,
) -> std::result::Result<Vec<EigenRecord>, Vec<String>> {
    let m = &cfg.mapping;
    let doc: Value =
        serde_json::from_str(body).map_err(|e| vec![format!("malformed JSON: {e}")])?;
    let items = match doc.pointer(&m.records) {
        Some(Value::Array(items)) => items,
        _ => return Err(vec![format!("no array at {:?}", m.records)]),
    };
    let requested = CharField::Label(format!("{}.{}", req.level, req.conrey));
    let tol = cfg.tolerances.normalize();
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let one = (|| -> Result<EigenRecord> {
            let field = match &m.character {
                None => requested.clone(),
                Some(ptr) => {
                    let v = pointer(item, ptr, p.get())
                        .ok_or_else(|| Error::integrity(format!("missing character at {ptr:?}")))?;
                    match m.character_kind {
                        CharacterKind::ConreyLabel => CharField::Label(
                            v.as_str()
                                .ok_or_else(|| Error::integrity("character label is not a string"))?
                                .to_string(),
                        ),
                        CharacterKind::ConreyIndex => CharField::Label(format!(
                            "{}.{}",
                            req.level,
                            v.as_u64().ok_or_else(|| Error::integrity(
                                "character index is not an integer"
                            ))?
                        )),
                        CharacterKind::Object => CharField::Explicit(
                            serde_json::from_value::<CharacterRecord>(v.clone())
                                .map_err(|e| Error::integrity(e.to_string()))?,
                        ),
                    }
                }
            };
            let (character, char_label) = chars.resolve(&field)?;
            if character.modulus() != req.level {
                return Err(Error::integrity(format!(
                    "character modulus {} does not match level {}",
                    character.modulus(),
                    req.level
                )));
            }
            let raw = pointer(item, &m.value, p.get())
                .ok_or_else(|| Error::integrity(format!("missing value at {:?}", m.value)))?;
            let (lambda, ap) = match m.value_kind {
                ValueKind::Lambda => (
                    Some(
                        raw.as_f64()
                            .ok_or_else(|| Error::integrity("lambda is not a number"))?,
                    ),
                    None,
                ),
                ValueKind::Ap | ValueKind::ApAnalytic => {
                    let mut z = complex_of(raw)
                        .ok_or_else(|| Error::integrity("a_p is neither a number nor [re, im]"))?;
                    if m.value_kind == ValueKind::ApAnalytic {
                        z *= (p.get() as f64).powf((req.weight as f64 - 1.0) / 2.0);
                    }
                    (None, Some(z))
                }
            };
            let form_id = match &m.form_id {
                Some(ptr) => pointer(item, ptr, p.get()).map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                }),
                None => None,
            };
            let field_degree =
                match &m.field_degree {
                    Some(ptr) => match pointer(item, ptr, p.get()) {
                        Some(v) => {
                            Some(v.as_u64().and_then(|d| u32::try_from(d).ok()).ok_or_else(
                                || Error::integrity("field degree is not a small integer"),
                            )?)
                        }
                        None => None,
                    },
                    None => None,
                };
            let rec = EigenRecord {
                level: req.level,
                weight: req.weight,
                character,
                char_label,
                p,
                lambda,
                ap,
                field_degree,
                form_id,
            };
            rec.validate()?;
            rec.normalize(tol)?;
            Ok(rec)
        })();
        match one {
            Ok(rec) => out.push(rec),
            Err(e) => errors.push(format!("element {i}: {e}")),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

type FetchResult = Result<(Fetched, bool)>;

enum Fetched {
    Body(String),
    Failed(String),
}

fn fetch_one(
    req: &Request,
    cfg: &Config,
    cache: &Cache,
    transport: &dyn Transport,
) -> Result<(Fetched, bool)> {
    let key = request_key(&cfg.endpoint, &req.url);
    if let Some(entry) = cache.get(&key)? {
        return Ok((Fetched::Body(entry.payload), true));
    }
    if cfg.offline {
        return Ok((
            Fetched::Failed(format!("offline and not cached: {}", req.url)),
            false,
        ));
    }
    let mut last = String::new();
    for attempt in 0..=cfg.retries {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(
                cfg.retry_backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(16)),
            ));
        }
        match transport.get(&req.url) {
            Ok(body) => return Ok((Fetched::Body(body), false)),
            Err(e) => {
                log::warn!("GET {} failed (attempt {}): {e}", req.url, attempt + 1);
                last = e;
            }
        }
    }
    Ok((
        Fetched::Failed(format!(
            "{} after {} attempts: {last}",
            req.url,
            cfg.retries + 1
        )),
        false,
    ))
}

/// Fetches every space in `query`, serving from the cache where possible.
///
/// At most `max_in_flight` requests run at once. Transport failures and
/// malformed payloads are collected across all requests; a payload reaches
/// the cache only after all of its elements validate.
pub fn fetch_remote(
    query: &SpaceQuery,
    cfg: &Config,
    transport: &dyn Transport,
) -> Result<FetchOutcome> {
    cfg.validate()?;
    let (requests, advisories) = plan(query, cfg)?;
    let cache = Cache::new(&cfg.cache_dir);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<FetchResult>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();
    let workers = cfg.max_in_flight.min(requests.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = requests.get(i) else { break };
                let r = fetch_one(req, cfg, &cache, transport);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });

    let mut chars = CharResolver::default();
    let mut records = Vec::new();
    let mut transport_errors = Vec::new();
    let mut integrity_errors = Vec::new();
    for (req, slot) in requests.iter().zip(slots) {
        let (fetched, from_cache) = slot
            .into_inner()
            .expect("slot lock")
            .expect("every request ran")?;
        match fetched {
            Fetched::Failed(e) => transport_errors.push(e),
            Fetched::Body(body) => match map_payload(req, &body, cfg, query.p, &mut chars) {
                Ok(recs) => {
                    if !from_cache {
                        cache.put(&request_key(&cfg.endpoint, &req.url), &body)?;
                    }
                    records.extend(recs);
                }
                Err(errs) => {
                    integrity_errors.extend(errs.into_iter().map(|e| format!("{}: {e}", req.url)))
                }
            },
        }
    }
    if !transport_errors.is_empty() {
        return Err(Error::Transport(transport_errors.join("; ")));
    }
    if !integrity_errors.is_empty() {
        return Err(Error::integrity(format!(
            "un-normalizable remote data: {}",
            integrity_errors.join("; ")
        )));
    }
    let mut header = DatasetHeader::new(cfg.endpoint.clone(), cfg.assume_complete);
    header.embedding = Some(cfg.embedding.clone());
    Ok(FetchOutcome {
        dataset: DatasetFile { header, records },
        advisories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::sync::atomic::AtomicUsize;

    struct Mock {
        bodies: HashMap<String, String>,
        calls: AtomicUsize,
    }

    impl Transport for Mock {
        fn get(&self, url: &str) -> std::result::Result<String, String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.bodies
                .get(url)
                .cloned()
                .ok_or_else(|| "404".to_string())
        }
    }

    fn config(dir: &std::path::Path) -> Config {
        Config {
            endpoint: "mock://db".into(),
            url_template: "{endpoint}/{N}/{k}/{c}".into(),
            cache_dir: dir.to_path_buf(),
            retries: 1,
            retry_backoff_ms: 0,
            ..Config::default()
        }
    }

    fn query(levels: RangeInclusive<u64>, character: CharConstraint) -> SpaceQuery {
        SpaceQuery {
            levels,
            weights: 2..=2,
            character,
            p: Prime::new(2).unwrap(),
        }
    }

    fn mock(entries: &[(&str, &str)]) -> Mock {
        Mock {
            bodies: entries
                .iter()
                .map(|(u, b)| (u.to_string(), b.to_string()))
                .collect(),
            calls: AtomicUsize::new(0),
        }
    }

    #[test]
    fn fetch_then_offline_replay_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let body = r#"{"data":[{"label":"11.2.a.a","dim":1,"traces":[1,-2,-1]}]}"#;
        let t = mock(&[("mock://db/11/2/1", body)]);
        let q = query(11..=11, CharConstraint::Trivial);
        let first = fetch_remote(&q, &cfg, &t).unwrap();
        assert_eq!(first.dataset.records.len(), 1);
        let lambda = first.dataset.records[0]
            .normalize(cfg.tolerances.normalize())
            .unwrap();
        assert!((lambda + 2f64.sqrt()).abs() < 1e-12);

        let offline = Config {
            offline: true,
            ..cfg.clone()
        };
        let second = fetch_remote(&q, &offline, &NoNetwork).unwrap();
        assert_eq!(second.dataset.serialize(), first.dataset.serialize());
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn offline_miss_is_transport_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            offline: true,
            ..config(dir.path())
        };
        let err =
            fetch_remote(&query(11..=11, CharConstraint::Trivial), &cfg, &NoNetwork).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn retries_then_fails() {
        let dir = tempfile::tempdir().unwrap();
        let t = mock(&[]);
        let err = fetch_remote(
            &query(11..=11, CharConstraint::Trivial),
            &config(dir.path()),
            &t,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
        assert_eq!(t.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn exceptional_space_is_skipped_with_advisory() {
        // 24.7 has conductor 4 and 24/4 = 6.
        let dir = tempfile::tempdir().unwrap();
        let t = mock(&[]);
        let chi = DirichletCharacter::from_conrey(24, 7).unwrap();
        assert_eq!(chi.conductor(), 4);
        let q = SpaceQuery {
            levels: 24..=24,
            weights: 3..=3,
            character: CharConstraint::Conrey(7),
            p: Prime::new(5).unwrap(),
        };
        let out = fetch_remote(&q, &config(dir.path()), &t).unwrap();
        assert!(out.dataset.records.is_empty());
        assert_eq!(out.advisories.len(), 1);
        assert!(out.advisories[0].contains("dim = 0"));
        assert_eq!(t.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn malformed_payload_does_not_poison_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let q = query(11..=11, CharConstraint::Trivial);
        for body in [
            "{not json",
            r#"{"data":[{"traces":[1,9,0]}]}"#,
            r#"{"rows":[]}"#,
        ] {
            let t = mock(&[("mock://db/11/2/1", body)]);
            let err = fetch_remote(&q, &cfg, &t).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
            assert_eq!(
                std::fs::read_dir(dir.path())
                    .map(|d| d.count())
                    .unwrap_or(0),
                0
            );
        }
    }

    #[test]
    fn any_character_plans_by_parity() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let (reqs, _) = plan(&query(5..=5, CharConstraint::Any), &cfg).unwrap();
        let cs: Vec<u64> = reqs.iter().map(|r| r.conrey).collect();
        assert_eq!(cs, vec![1, 4]);
        let (reqs, adv) = plan(&query(4..=4, CharConstraint::Any), &cfg).unwrap();
        assert!(reqs.is_empty());
        assert!(adv[0].contains("p divides N"));
        assert_eq!(
            fill_p("/traces/{p_minus_1}/{p_index}/{p}", 7),
            "/traces/6/3/7"
        );
    }

    #[test]
    fn concurrent_fetch_keeps_request_order() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            max_in_flight: 3,
            ..config(dir.path())
        };
        let mut entries = Vec::new();
        for n in [1u64, 3, 5, 7, 9, 11, 13, 15] {
            entries.push((
                format!("mock://db/{n}/2/1"),
                format!(r#"{{"data":[{{"label":"{n}","traces":[1,0.5]}}]}}"#),
            ));
        }
        let t = Mock {
            bodies: entries.into_iter().collect(),
            calls: AtomicUsize::new(0),
        };
        let out = fetch_remote(&query(1..=15, CharConstraint::Trivial), &cfg, &t).unwrap();
        let levels: Vec<u64> = out.dataset.records.iter().map(|r| r.level).collect();
        assert_eq!(levels, vec![1, 3, 5, 7, 9, 11, 13, 15]);
    }
}
