// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use pulsecal::params::{ParamKey, ParamKind};
use pulsecal::sim::{presets, Backend, DeviceConfig, SamplingMode, SimBackend};
use pulsecal_service::daemon::preset;
use pulsecal_service::{
    open_and_serve, spawn_query_server, CycleReport, Daemon, DaemonConfig, HttpBackend, ParamSink, ParamStore,
    PutOutcome, QueryClient, TimeMode,
};

/// Noiseless, drift-free device whose drive gains are off by a few percent,
/// so the vendor pulses are miscalibrated but nothing changes over time.
fn static_device() -> DeviceConfig {
    let mut cfg = presets::ideal_line(2);
    cfg.sampling = SamplingMode::Expected;
    cfg.qubits[0].gain = 1.04;
    cfg.qubits[1].gain = 0.97;
    cfg
}

fn quick_config() -> DaemonConfig {
    DaemonConfig { put_retries: 1, put_backoff_ms: 1, ..DaemonConfig::default() }
}

fn daemon(cfg: DaemonConfig, device: DeviceConfig, sink: Arc<dyn ParamSink>) -> Daemon {
    Daemon::new(cfg, Arc::new(SimBackend::new(device).unwrap()), sink).unwrap()
}

fn rx_updates(r: &CycleReport) -> usize {
    r.rx.iter().filter(|x| matches!(x.outcome, PutOutcome::Posted { .. })).count()
}

#[test]
fn static_device_second_cycle_posts_no_rx() {
    let store = Arc::new(ParamStore::in_memory());
    let mut d = daemon(DaemonConfig { calibrate_cr: false, ..quick_config() }, static_device(), store.clone());
    let first = d.run_cycle();
    assert_eq!(rx_updates(&first), 2, "{first:#?}");
    for r in &first.rx {
        let v = r.validation.as_ref().unwrap();
        assert!(v.accept && v.candidate_error < v.baseline_error);
    }
    let second = d.run_cycle();
    assert_eq!(second.updates(), 0, "{second:#?}");
    assert!(second.rx.iter().all(|r| r.validation.as_ref().is_some_and(|v| !v.accept)));
    assert_eq!(store.as_ref().get(ParamKind::Rx, ParamKey::Qubit(0)).unwrap().version, 1);
}

#[test]
fn posted_parameters_always_passed_their_checks() {
    let mut device = presets::lima();
    device.sampling = SamplingMode::Multinomial;
    let store = Arc::new(ParamStore::in_memory());
    let cfg = DaemonConfig { qubits: Some(vec![0, 1]), pairs: Some(vec![(0, 1)]), ..quick_config() };
    let mut d = daemon(cfg, device, store);
    for _ in 0..2 {
        let r = d.run_cycle();
        for x in &r.rx {
            if matches!(x.outcome, PutOutcome::Posted { .. }) {
                assert!(x.validation.as_ref().unwrap().accept);
            }
            assert!(x.error.is_none(), "{:?}", x.error);
            assert!(x.fit.is_some());
        }
        for x in &r.cr {
            if matches!(x.outcome, PutOutcome::Posted { .. }) {
                let best = x.best.unwrap();
                assert!(!best.baseline && best.score > x.baseline_score.unwrap());
            }
            assert!(x.error.is_none(), "{:?}", x.error);
        }
    }
}

#[test]
fn unreachable_query_server_leaves_puts_pending() {
    let store = Arc::new(ParamStore::in_memory());
    let server = spawn_query_server(store.clone(), "127.0.0.1:0".parse().unwrap()).unwrap();
    let addr = server.addr();
    server.shutdown().unwrap();
    let client = Arc::new(QueryClient::new(&format!("http://{addr}")).unwrap());
    let mut d = daemon(DaemonConfig { calibrate_cr: false, ..quick_config() }, static_device(), client);
    let r = d.run_cycle();
    assert!(r.rx.iter().all(|x| x.outcome == PutOutcome::Pending), "{r:#?}");
    assert_eq!(r.pending, 2);
    let _server = spawn_query_server(store.clone(), addr).unwrap();
    let r = d.run_cycle();
    assert_eq!(r.pending, 0);
    assert!(store.as_ref().get(ParamKind::Rx, ParamKey::Qubit(0)).is_some());
    assert!(store.as_ref().get(ParamKind::Rx, ParamKey::Qubit(1)).is_some());
}

#[test]
fn cadence_is_kept_in_simulated_time() {
    let mut device = presets::ideal_line(1);
    device.queue_delay_s = 5.0;
    let cfg = DaemonConfig { cadence_s: 3600.0, calibrate_cr: false, ..quick_config() };
    let mut d = daemon(cfg, device, Arc::new(ParamStore::in_memory()));
    let mut starts = Vec::new();
    let stop = AtomicBool::new(false);
    let ran = d.run_forever(TimeMode::Simulated { factor: f64::INFINITY }, &stop, Some(10), |r| starts.push(r.started_at));
    assert_eq!(ran, 10);
    for w in starts.windows(2) {
        assert!(((w[1] - w[0]) - 3600.0).abs() <= 0.05 * 3600.0, "{starts:?}");
    }
}

#[test]
fn restart_resumes_particle_generation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DaemonConfig { calibrate_rx: false, data_dir: Some(dir.path().join("db")), ..quick_config() };
    let store: Arc<dyn ParamSink> = Arc::new(ParamStore::in_memory());
    {
        let mut d = daemon(cfg.clone(), presets::ideal_line(2), store.clone());
        d.run_cycle();
        d.run_cycle();
        assert_eq!(d.filter(0, 1).unwrap().generation, 2);
    }
    let mut d = daemon(cfg, presets::ideal_line(2), store);
    assert_eq!(d.cycles_run(), 2);
    assert_eq!(d.filter(0, 1).unwrap().generation, 2);
    let r = d.run_cycle();
    assert_eq!(r.cycle, 3);
    assert_eq!(r.cr[0].generation, 3);
}

#[test]
fn same_seed_same_decisions() {
    let decisions = || {
        let mut device = presets::lima();
        device.seed = 11;
        let cfg = DaemonConfig { qubits: Some(vec![1]), pairs: Some(vec![(1, 2)]), seed: 4, ..quick_config() };
        let mut d = daemon(cfg, device, Arc::new(ParamStore::in_memory()));
        let r = d.run_cycle();
        (r.rx.iter().map(|x| x.outcome.clone()).collect::<Vec<_>>(), r.cr.iter().map(|x| (x.outcome.clone(), x.best)).collect::<Vec<_>>())
    };
    assert_eq!(decisions(), decisions());
}

#[test]
fn dead_backend_skips_cycles_without_spinning() {
    let backend = Arc::new(HttpBackend::new("http://127.0.0.1:9").unwrap());
    let cfg = DaemonConfig { failure_backoff_s: 0.01, cadence_s: 0.05, ..quick_config() };
    let mut d = Daemon::new(cfg, backend, Arc::new(ParamStore::in_memory())).unwrap();
    let stop = AtomicBool::new(false);
    let mut skipped = 0;
    let t = std::time::Instant::now();
    d.run_forever(TimeMode::Wall, &stop, Some(3), |r| skipped += r.skipped.is_some() as usize);
    assert_eq!(skipped, 3);
    assert!(t.elapsed().as_secs_f64() >= 0.02);
    assert_eq!(d.cycles_run(), 0);
}

#[test]
fn config_checks() {
    assert!(DaemonConfig::from_json(r#"{"cadence_s": 0}"#).is_err());
    assert!(DaemonConfig::from_json(r#"{"cr_shots": 0}"#).is_err());
    let c = DaemonConfig::from_json(r#"{"backend": {"preset": "line-3"}, "seed": 9}"#).unwrap();
    assert_eq!(c.cadence_s, 7200.0);
    assert_eq!(c.backend.device_config().unwrap().unwrap().qubits.len(), 3);
    assert!(preset("mars").is_err());
    let url = DaemonConfig::from_json(r#"{"backend": {"url": "http://x"}}"#).unwrap();
    assert!(url.backend.device_config().unwrap().is_none());
}

#[test]
fn daemon_publishes_through_http() {
    let dir = tempfile::tempdir().unwrap();
    let (_store, server) = open_and_serve(dir.path(), "127.0.0.1:0".parse().unwrap()).unwrap();
    let client = Arc::new(QueryClient::new(&server.url()).unwrap());
    let mut d = daemon(DaemonConfig { calibrate_cr: false, ..quick_config() }, static_device(), client.clone());
    let r = d.run_cycle();
    assert_eq!(rx_updates(&r), 2);
    assert_eq!(client.snapshot().unwrap().rx.len(), 2);
    let _ = SimBackend::new(static_device()).unwrap().now();
}
