//! Acceptance suite. Each test prints one PASS/FAIL line; they run one at a
//! time so the timing-sensitive ones get the machine to themselves.

mod common;

use common::{
    check_golden, golden_frame, golden_init, golden_update, handshake_transcript, manual_device, random_frame, random_fs_op, tcp,
    FsModel, FsOp, FsOutcome, Sniffer, GOLDEN_SECRET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remoteframe::bench::{check_orderings, run_benchmark, BenchConfig, BenchReport};
use remoteframe::device::{standard_workload, Device, DeviceState, SimClock};
use remoteframe::encodings::{decode_rect, encode_rect, select_encoding, CompressionContext, DecompressionContext, EncodingId};
use remoteframe::pixel::{FrameBuffer, PixelFormat, Rectangle};
use remoteframe::rfb::RfbClient;
use remoteframe::services::{run_cmd_session, AppFilter, CmdClient, CmdContext, ErrorCode, Services};
use remoteframe::transport::{compute_mac, pipe_pair, serve, AuthPolicy, ChannelKind, ServerConfig, TransportProfile};
use std::io::{Read, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line (straight to stderr, past the test harness's
/// capture) and fails the test on FAIL.
fn verdict(name: &str, result: Result<String, String>) {
    let line = match &result {
        Ok(detail) => format!("PASS {name}: {detail}\n"),
        Err(why) => format!("FAIL {name}: {why}\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(why) = result {
        panic!("{name}: {why}");
    }
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

const TABLE_ENCODINGS: [EncodingId; 5] = [EncodingId::Raw, EncodingId::Rre, EncodingId::Hextile, EncodingId::Zlib, EncodingId::Tight];
const SEED: u64 = 2011;

#[test]
fn losslessness() {
    let _g = serial();
    let run = || -> Result<String, String> {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let formats = [PixelFormat::canonical(), PixelFormat::rgb565()];
        for enc in EncodingId::ALL {
            for case in 0..1000 {
                let (w, h) = (rng.gen_range(1..=128u16), rng.gen_range(1..=128u16));
                let (ox, oy) = (rng.gen_range(0..6u16), rng.gen_range(0..6u16));
                let fb = random_frame(rng.gen(), w + ox, h + oy, rng.gen_range(1..300));
                let fmt = &formats[case % 2];
                let rect = Rectangle::new(ox, oy, w, h);
                let mut ctx = CompressionContext::new();
                let mut dctx = DecompressionContext::new();
                let mut out = FrameBuffer::new(fb.width(), fb.height(), *fmt, 0);
                for e in encode_rect(&fb, rect, fmt, enc, &mut ctx).map_err(|e| format!("{enc} case {case}: {e}"))? {
                    let px = decode_rect(&e, fmt, &mut dctx).map_err(|e| format!("{enc} case {case}: {e}"))?;
                    out.blit(&e.rect, &px).unwrap();
                }
                ensure(out.extract(&rect, fmt).unwrap() == fb.extract(&rect, fmt).unwrap(), || {
                    format!("{enc} case {case}: {w}x{h} at {} bpp differs", fmt.bits_per_pixel)
                })?;
            }
        }
        let took = t.elapsed();
        ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
        Ok(format!("6 encodings x 1000 rects in {:.1} s", took.as_secs_f64()))
    };
    verdict("losslessness", run());
}

#[test]
fn negotiation() {
    let _g = serial();
    use EncodingId::*;
    let all = EncodingId::ALL.to_vec();
    let no_zlib = vec![Raw, Rre, CoRre, Hextile, Tight];
    let table: Vec<(Vec<i32>, Vec<EncodingId>, EncodingId)> = vec![
        (vec![7, 5], all.clone(), Tight),
        (vec![999], all.clone(), Raw),
        (vec![], all.clone(), Raw),
        (vec![5, 7], all.clone(), Hextile),
        (vec![999, 6], all.clone(), Zlib),
        (vec![7], vec![Raw, Hextile], Raw),
        (vec![7, 5], vec![Raw, Hextile], Hextile),
        (vec![-239, 16], all.clone(), Raw),
        (vec![16, 2], all.clone(), Rre),
        (vec![4], all.clone(), CoRre),
        (vec![0], all.clone(), Raw),
        (vec![1, 5], all.clone(), Hextile),
        (vec![6, 6, 7], all.clone(), Zlib),
        (vec![-32, 7], all.clone(), Tight),
        (vec![2, 4, 5], vec![Raw, CoRre], CoRre),
        (vec![5], vec![Raw], Raw),
        (vec![i32::MAX, i32::MIN], all.clone(), Raw),
        (vec![7, 6, 5, 4, 2, 0], all.clone(), Tight),
        (vec![0, 7], all.clone(), Raw),
        (vec![6], no_zlib, Raw),
    ];
    let run = || -> Result<String, String> {
        for (i, (prefs, supported, want)) in table.iter().enumerate() {
            let got = select_encoding(prefs, supported);
            ensure(got == *want, || format!("case {i}: {prefs:?} over {supported:?} gave {got}, want {want}"))?;
        }
        Ok(format!("{} cases", table.len()))
    };
    verdict("negotiation", run());
}

struct Batch {
    reports: Vec<BenchReport>,
    took: Duration,
}

fn bench_batch(profile: TransportProfile) -> Batch {
    let t = Instant::now();
    let mut script = standard_workload();
    script.seed = SEED;
    let reports = TABLE_ENCODINGS
        .iter()
        .map(|&e| run_benchmark(&BenchConfig::new(script.clone(), e, profile.clone())).expect("benchmark run"))
        .collect();
    Batch { reports, took: t.elapsed() }
}

fn usb_batch() -> &'static Batch {
    static USB: OnceLock<Batch> = OnceLock::new();
    USB.get_or_init(|| bench_batch(TransportProfile::usb()))
}

fn by_name<'a>(reports: &'a [BenchReport], enc: EncodingId) -> &'a BenchReport {
    reports.iter().find(|r| r.encoding == enc.name()).unwrap()
}

#[test]
fn usb_compression_ordering() {
    let _g = serial();
    let run = || -> Result<String, String> {
        let batch = usb_batch();
        let r = |e| by_name(&batch.reports, e).compression_ratio;
        ensure(r(EncodingId::Raw) == 1.0, || format!("raw ratio {}", r(EncodingId::Raw)))?;
        for pair in TABLE_ENCODINGS.windows(2) {
            ensure(r(pair[1]) > r(pair[0]), || format!("{} {:.2} not above {} {:.2}", pair[1], r(pair[1]), pair[0], r(pair[0])))?;
        }
        ensure(r(EncodingId::Tight) >= 10.0, || format!("tight ratio {:.2} below 10", r(EncodingId::Tight)))?;
        ensure(batch.took < Duration::from_secs(120), || format!("took {:?}", batch.took))?;
        let ratios: Vec<String> = TABLE_ENCODINGS.iter().map(|&e| format!("{e} {:.2}", r(e))).collect();
        Ok(format!("{} in {:.0} s", ratios.join(", "), batch.took.as_secs_f64()))
    };
    verdict("usb compression ordering", run());
}

#[test]
fn wifi_rate_ordering() {
    let _g = serial();
    let run = || -> Result<String, String> {
        let usb = usb_batch();
        let wifi = bench_batch(TransportProfile::wifi());
        let mut all = usb.reports.clone();
        all.extend(wifi.reports.iter().cloned());
        let failures = check_orderings(&all);
        ensure(failures.is_empty(), || failures.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))?;
        // The same checks, spelled out.
        let ups = |reports: &[BenchReport], e| by_name(reports, e).updates_per_second;
        for pair in [[EncodingId::Raw, EncodingId::Hextile], [EncodingId::Hextile, EncodingId::Zlib], [EncodingId::Zlib, EncodingId::Tight]] {
            ensure(ups(&wifi.reports, pair[1]) > ups(&wifi.reports, pair[0]), || format!("wifi {} not faster than {}", pair[1], pair[0]))?;
        }
        for e in TABLE_ENCODINGS {
            ensure(ups(&wifi.reports, e) <= ups(&usb.reports, e), || {
                format!("{e}: wifi {:.2}/s above usb {:.2}/s", ups(&wifi.reports, e), ups(&usb.reports, e))
            })?;
        }
        let rates: Vec<String> = TABLE_ENCODINGS.iter().map(|&e| format!("{e} {:.1}/s", ups(&wifi.reports, e))).collect();
        Ok(rates.join(", "))
    };
    verdict("wifi update-rate ordering", run());
}

#[test]
fn protocol_goldens() {
    let _g = serial();
    let run = || -> Result<String, String> {
        check_golden("server_init_480x800.bin", &golden_init().to_bytes());
        check_golden("handshake_none.txt", handshake_transcript(AuthPolicy::None, None).as_bytes());
        let policy = AuthPolicy::shared_secret(GOLDEN_SECRET.to_vec()).unwrap();
        check_golden("handshake_mac.txt", handshake_transcript(policy, Some(GOLDEN_SECRET)).as_bytes());
        let fb = Arc::new(golden_frame());
        for enc in EncodingId::ALL {
            check_golden(&format!("update_{}.bin", enc.name()), &golden_update(&fb, enc).to_bytes());
        }
        Ok("ServerInit, 2 handshakes, 6 updates byte-identical".into())
    };
    verdict("protocol goldens", run());
}

/// A command client talking to its own in-process session.
fn cmd_pair(services: Services) -> CmdClient {
    let (server_end, client_end) = pipe_pair();
    let ctx = CmdContext { services, auth: AuthPolicy::None, encrypt: false };
    std::thread::spawn(move || run_cmd_session(Box::new(server_end), &ctx, 1));
    CmdClient::connect(Box::new(client_end), None).unwrap()
}

fn client_fs_op(c: &mut CmdClient, op: &FsOp) -> Result<FsOutcome, ErrorCode> {
    let r = match op {
        FsOp::Put(path, data) => c.fs_put(path, data).map(|_| FsOutcome::Done),
        FsOp::Get(path) => c.fs_get(path).map(FsOutcome::Data),
        FsOp::Remove(path, recursive) => c.fs_remove(path, *recursive).map(|_| FsOutcome::Done),
        FsOp::List(path) => c.fs_list(path).map(|nodes| FsOutcome::Paths(nodes.into_iter().map(|n| n.path).collect())),
    };
    r.map_err(|e| e.code())
}

/// Registry invariants as seen through the command channel.
fn registry_invariants(c: &mut CmdClient) -> Result<(), String> {
    let apps = c.list_applications(AppFilter::All).map_err(|e| e.to_string())?;
    let procs = c.list_processes().map_err(|e| e.to_string())?;
    let mut ids: Vec<&str> = apps.iter().map(|a| a.id.as_str()).collect();
    ids.sort_unstable();
    ensure(ids.windows(2).all(|w| w[0] != w[1]), || "duplicate package id".into())?;
    let mut pids: Vec<u32> = procs.iter().map(|p| p.pid).collect();
    pids.sort_unstable();
    ensure(pids.windows(2).all(|w| w[0] != w[1]), || "duplicate pid".into())?;
    for a in apps.iter().filter(|a| a.running) {
        ensure(procs.iter().any(|p| p.owner.as_deref() == Some(&a.id)), || format!("running {} has no process", a.id))?;
    }
    for p in &procs {
        if let Some(o) = &p.owner {
            ensure(apps.iter().any(|a| &a.id == o && a.running), || format!("pid {} owned by stopped {o}", p.pid))?;
        }
    }
    let running = c.list_applications(AppFilter::Running).map_err(|e| e.to_string())?;
    ensure(running.iter().all(|a| a.running) && running.len() == apps.iter().filter(|a| a.running).count(), || {
        "running filter disagrees with the full list".into()
    })
}

#[test]
fn service_model() {
    let _g = serial();
    let run = || -> Result<String, String> {
        let services = Services::new(manual_device());
        let mut model = FsModel::from_services(&services);
        let mut c = cmd_pair(services.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for i in 0..500 {
            let op = random_fs_op(&mut rng);
            let (want, got) = (model.apply(&op), client_fs_op(&mut c, &op));
            ensure(want == got, || format!("fs op {i} {op:?}: model {want:?}, service {got:?}"))?;
        }

        for i in 0..200 {
            match rng.gen_range(0..6) {
                0 => {
                    let id = format!("org.accept.app{}", rng.gen_range(0..5));
                    let version = format!("1.{}", rng.gen_range(0..3));
                    if let Ok(rec) = c.install_application(&id, &version, b"apk", rng.gen()) {
                        let apps = c.list_applications(AppFilter::All).map_err(|e| e.to_string())?;
                        ensure(apps.iter().any(|a| a.id == id && a.version == version), || format!("call {i}: {} not listed", rec.id))?;
                    }
                }
                1 => {
                    let apps = c.list_applications(AppFilter::All).map_err(|e| e.to_string())?;
                    if !apps.is_empty() {
                        let id = apps[rng.gen_range(0..apps.len())].id.clone();
                        c.uninstall_application(&id).map_err(|e| format!("call {i}: {e}"))?;
                        let after = c.list_applications(AppFilter::All).map_err(|e| e.to_string())?;
                        ensure(!after.iter().any(|a| a.id == id), || format!("call {i}: {id} still listed"))?;
                        ensure(c.uninstall_application(&id).is_err(), || format!("call {i}: second uninstall of {id} succeeded"))?;
                    }
                }
                2 => {
                    let procs = c.list_processes().map_err(|e| e.to_string())?;
                    if let Some(p) = procs.get(rng.gen_range(0..procs.len().max(1))) {
                        c.kill_process(p.pid).map_err(|e| format!("call {i}: {e}"))?;
                        let after = c.list_processes().map_err(|e| e.to_string())?;
                        ensure(!after.iter().any(|q| q.pid == p.pid), || format!("call {i}: pid {} survived", p.pid))?;
                    }
                }
                3 => {
                    ensure(c.kill_process(rng.gen_range(50_000..60_000)).is_err(), || format!("call {i}: killed a missing pid"))?;
                }
                4 => {
                    let line = ["ps", "ls /data/app", "echo x", "uname", "cat /nope"][rng.gen_range(0..5)];
                    let _ = c.shell_exec(line);
                }
                _ => {
                    c.device_status().map_err(|e| e.to_string())?;
                }
            }
            registry_invariants(&mut c).map_err(|e| format!("after call {i}: {e}"))?;
            services.device().state().check_consistency().map_err(|e| format!("after call {i}: {e}"))?;
        }
        Ok("500 fs ops match the model, invariants hold over 200 calls".into())
    };
    verdict("service model", run());
}

#[test]
fn security() {
    let _g = serial();
    const SECRET: &[u8] = b"acceptance secret";
    let run = || -> Result<String, String> {
        for encrypt in [false, true] {
            let cfg = ServerConfig { auth: AuthPolicy::shared_secret(SECRET).unwrap(), encrypt, ..ServerConfig::ephemeral() };
            let h = serve(cfg, manual_device()).map_err(|e| e.to_string())?;
            ensure(RfbClient::connect(tcp(h.rfb_addr()), Some(b"guess")).is_err(), || "wrong rfb secret accepted".into())?;
            ensure(CmdClient::connect(tcp(h.cmd_addr()), Some(b"guess")).is_err(), || "wrong cmd secret accepted".into())?;

            let (rfb, cmd) = (Sniffer::new(h.rfb_addr()), Sniffer::new(h.cmd_addr()));
            let mut v = RfbClient::connect(tcp(rfb.addr), Some(SECRET)).map_err(|e| e.to_string())?;
            v.request_update(v.screen(), false).map_err(|e| e.to_string())?;
            v.read_update().map_err(|e| e.to_string())?;
            v.close();
            let mut c = CmdClient::connect(tcp(cmd.addr), Some(SECRET)).map_err(|e| e.to_string())?;
            c.device_status().map_err(|e| e.to_string())?;
            c.close();
            std::thread::sleep(Duration::from_millis(50));
            for (name, cap) in [("rfb", rfb.captured()), ("cmd", cmd.captured())] {
                ensure(!common::contains(&cap, SECRET), || format!("{name} capture contains the secret (encrypt={encrypt})"))?;
            }

            // Replay the captured MAC on a fresh connection.
            let cap = rfb.captured();
            let mac = cap[43..75].to_vec();
            ensure(mac == compute_mac(SECRET, cap[27..43].try_into().unwrap(), ChannelKind::Rfb), || "capture layout".into())?;
            let mut s = tcp(h.rfb_addr());
            let mut buf = [0u8; 12];
            s.read_exact(&mut buf).unwrap();
            s.write_all(b"RFB 003.008\n").unwrap();
            let mut types = [0u8; 2];
            s.read_exact(&mut types).unwrap();
            s.write_all(&types[1..]).unwrap();
            let mut nonce = [0u8; 16];
            s.read_exact(&mut nonce).unwrap();
            s.write_all(&mac).unwrap();
            let mut result = [0u8; 4];
            s.read_exact(&mut result).unwrap();
            ensure(result != [0; 4], || "replayed MAC accepted".into())?;
            h.shutdown();
        }
        Ok("wrong secret and replayed MAC refused, no secret bytes on the wire".into())
    };
    verdict("security", run());
}

#[test]
fn concurrency() {
    let _g = serial();
    const RUN: Duration = Duration::from_secs(30);
    let run = || -> Result<String, String> {
        let mut script = standard_workload();
        let steps = script.steps.clone();
        for _ in 0..3 {
            script.steps.extend(steps.iter().cloned());
        }
        let device = Device::new(DeviceState::fixture(), script, SimClock::manual(0)).map_err(|e| e.to_string())?;
        let h = serve(ServerConfig::ephemeral(), device.clone()).map_err(|e| e.to_string())?;
        let stop = Arc::new(AtomicBool::new(false));
        let ticker = {
            let (device, stop) = (device.clone(), stop.clone());
            std::thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    std::thread::sleep(Duration::from_millis(16));
                    device.clock().advance(16);
                }
            })
        };
        let deadline = Instant::now() + RUN;

        let viewers: Vec<_> = [EncodingId::Tight, EncodingId::Zlib, EncodingId::Hextile, EncodingId::Raw]
            .into_iter()
            .map(|enc| {
                let addr = h.rfb_addr();
                std::thread::spawn(move || -> Result<(RfbClient, u64), String> {
                    let mut c = RfbClient::connect(tcp(addr), None).map_err(|e| e.to_string())?;
                    c.set_encodings(&[enc.code()]).map_err(|e| e.to_string())?;
                    c.request_update(c.screen(), false).map_err(|e| e.to_string())?;
                    let mut updates = 0u64;
                    loop {
                        // One request in flight at a time: every update must
                        // answer the latest request, and the persistent zlib
                        // streams only decode if nothing was dropped or reordered.
                        let u = match c.poll_update(Duration::from_millis(200)).map_err(|e| format!("{enc} after {updates} updates: {e}"))? {
                            Some(u) => u,
                            None if Instant::now() >= deadline => return Ok((c, updates)),
                            None => continue,
                        };
                        if u.rects.iter().any(|r| r.encoding != enc) {
                            return Err(format!("{enc}: foreign rect encoding"));
                        }
                        updates += 1;
                        if Instant::now() >= deadline {
                            return Ok((c, updates));
                        }
                        c.request_update(c.screen(), true).map_err(|e| e.to_string())?;
                    }
                })
            })
            .collect();

        let commanders: Vec<_> = (0..4)
            .map(|n| {
                let addr = h.cmd_addr();
                std::thread::spawn(move || -> Result<u64, String> {
                    let mut c = CmdClient::connect(tcp(addr), None).map_err(|e| e.to_string())?;
                    let mut calls = 0u64;
                    let path = format!("/sdcard/worker{n}.txt");
                    while Instant::now() < deadline {
                        let body = format!("{n}:{calls}");
                        c.fs_put(&path, body.as_bytes()).map_err(|e| format!("cmd {n}: {e}"))?;
                        let back = c.fs_get(&path).map_err(|e| format!("cmd {n}: {e}"))?;
                        ensure(back == body.as_bytes(), || format!("cmd {n}: read back {back:?}"))?;
                        c.device_status().map_err(|e| format!("cmd {n}: {e}"))?;
                        c.list_processes().map_err(|e| format!("cmd {n}: {e}"))?;
                        calls += 4;
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Ok(calls)
                })
            })
            .collect();

        let rogue = {
            let (rfb, cmd) = (h.rfb_addr(), h.cmd_addr());
            std::thread::spawn(move || {
                let mut rounds = 0;
                while Instant::now() < deadline {
                    if let Ok(mut s) = std::net::TcpStream::connect(rfb) {
                        let _ = s.write_all(b"RFB 003.008\n\x01\x01\xff\xff\xff\xff garbage");
                    }
                    if let Ok(mut s) = std::net::TcpStream::connect(cmd) {
                        let mut greeting = [0u8; 6];
                        let _ = s.read_exact(&mut greeting);
                        let _ = s.write_all(&[0xff; 40]);
                    }
                    rounds += 1;
                    std::thread::sleep(Duration::from_millis(100));
                }
                rounds
            })
        };

        let mut viewer_results = Vec::new();
        for v in viewers {
            viewer_results.push(v.join().map_err(|_| "viewer panicked".to_string())?);
        }
        let mut calls = Vec::new();
        for c in commanders {
            calls.push(c.join().map_err(|_| "command client panicked".to_string())??);
        }
        let rogue_rounds = rogue.join().unwrap();
        stop.store(true, Ordering::SeqCst);
        ticker.join().unwrap();

        // With the clock stopped, a full refresh must reproduce the screen.
        let screen = device.snapshot();
        let mut counts = Vec::new();
        for r in viewer_results {
            let (mut c, updates) = r?;
            while c.poll_update(Duration::from_millis(300)).map_err(|e| e.to_string())?.is_some() {}
            c.request_update(c.screen(), false).map_err(|e| e.to_string())?;
            c.read_update().map_err(|e| e.to_string())?;
            ensure(c.mirror().pixels() == screen.pixels(), || "mirror differs from the device screen".into())?;
            ensure(updates > 10, || format!("only {updates} updates"))?;
            counts.push(updates);
        }
        ensure(calls.iter().all(|&n| n > 100), || format!("command calls {calls:?}"))?;
        ensure(rogue_rounds > 10, || format!("misbehaving client ran {rogue_rounds} rounds"))?;
        h.shutdown();
        Ok(format!("updates {counts:?}, command calls {calls:?}, {rogue_rounds} rogue connections"))
    };
    verdict("concurrency", run());
}

#[test]
fn determinism() {
    let _g = serial();
    let run = || -> Result<String, String> {
        let mut script = standard_workload();
        script.seed = SEED;
        let mut totals = Vec::new();
        for enc in TABLE_ENCODINGS {
            let cfg = BenchConfig::new(script.clone(), enc, TransportProfile::unthrottled()).lockstep(50);
            let a = run_benchmark(&cfg).map_err(|e| e.to_string())?;
            let b = run_benchmark(&cfg).map_err(|e| e.to_string())?;
            let key = |r: &BenchReport| (r.updates, r.rectangles_received, r.data_captured, r.data_compressed);
            ensure(key(&a) == key(&b), || format!("{enc}: {:?} vs {:?}", key(&a), key(&b)))?;
            totals.push(format!("{enc} {}", a.data_compressed));
        }
        Ok(format!("identical counters, compressed bytes {}", totals.join(", ")))
    };
    verdict("determinism", run());
}
