//! Property tests over the public API.

mod common;

use common::{random_frame, random_fs_op, run_fs_op, FsModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remoteframe::device::{load_scenario, standard_workload, DeviceState, InputKind, SimClock, Device};
use remoteframe::encodings::{
    decode_rect, encode_hextile, encode_raw, encode_rect, hextile_tile_count, CompressionContext, DecompressionContext, EncodedRect,
    EncodingId,
};
use remoteframe::pixel::{FrameBuffer, PixelFormat, Rectangle};
use remoteframe::rfb::{inject_input, Session};
use remoteframe::services::{AppFilter, Services};
use remoteframe::transport::{encrypt_channel, pipe_pair, throttle, Side, TransportProfile};
use std::io::{Read, Write};
use std::sync::Arc;

fn formats() -> [PixelFormat; 2] {
    [PixelFormat::canonical(), PixelFormat::rgb565()]
}

/// A frame of `w×h` plus a random margin, and the rect inside it.
fn framed(seed: u64, w: u16, h: u16, colors: usize) -> (FrameBuffer, Rectangle) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (ox, oy) = (rng.gen_range(0..8u16), rng.gen_range(0..8u16));
    let fb = random_frame(seed, w + ox + rng.gen_range(0..8), h + oy + rng.gen_range(0..8), colors);
    (fb, Rectangle::new(ox, oy, w, h))
}

fn round_trip(fb: &FrameBuffer, rect: Rectangle, fmt: &PixelFormat, enc: EncodingId) -> Vec<u32> {
    let mut ctx = CompressionContext::new();
    let mut dctx = DecompressionContext::new();
    let mut out = FrameBuffer::new(fb.width(), fb.height(), *fmt, 0);
    for e in encode_rect(fb, rect, fmt, enc, &mut ctx).unwrap() {
        let px = decode_rect(&e, fmt, &mut dctx).unwrap();
        out.blit(&e.rect, &px).unwrap();
    }
    out.extract(&rect, fmt).unwrap()
}

/// Walks a Hextile payload tile by tile and returns the tile count.
fn count_hextile_tiles(payload: &[u8], rect: Rectangle, bpp: usize) -> usize {
    let mut at = 0;
    let mut tiles = 0;
    for ty in (0..rect.h).step_by(16) {
        for tx in (0..rect.w).step_by(16) {
            let (tw, th) = (usize::from((rect.w - tx).min(16)), usize::from((rect.h - ty).min(16)));
            let sub = payload[at];
            at += 1;
            if sub & 1 != 0 {
                at += tw * th * bpp;
            } else {
                if sub & 2 != 0 {
                    at += bpp;
                }
                if sub & 4 != 0 {
                    at += bpp;
                }
                if sub & 8 != 0 {
                    let n = usize::from(payload[at]);
                    at += 1 + n * if sub & 16 != 0 { bpp + 2 } else { 2 };
                }
            }
            tiles += 1;
        }
    }
    assert_eq!(at, payload.len(), "trailing bytes after the last tile");
    tiles
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_encoding_is_lossless(seed: u64, w in 1u16..=128, h in 1u16..=128, colors in 1usize..300, wide: bool) {
        let fmt = formats()[usize::from(wide)];
        let (fb, rect) = framed(seed, w, h, colors);
        let expected = fb.extract(&rect, &fmt).unwrap();
        for enc in EncodingId::ALL {
            prop_assert_eq!(&round_trip(&fb, rect, &fmt, enc), &expected, "{}", enc);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raw_size_law(seed: u64, w in 1u16..=200, h in 1u16..=200, wide: bool) {
        let fmt = formats()[usize::from(wide)];
        let (fb, rect) = framed(seed, w, h, 50);
        let e = encode_raw(&fb, rect, &fmt).unwrap();
        prop_assert_eq!(e.payload.len(), usize::from(w) * usize::from(h) * usize::from(fmt.bits_per_pixel) / 8);
    }

    #[test]
    fn hextile_tile_count_law(seed: u64, w in 1u16..=200, h in 1u16..=200, colors in 1usize..40, wide: bool) {
        let fmt = formats()[usize::from(wide)];
        let (fb, rect) = framed(seed, w, h, colors);
        let e = encode_hextile(&fb, rect, &fmt).unwrap();
        let expected = usize::from(w).div_ceil(16) * usize::from(h).div_ceil(16);
        prop_assert_eq!(hextile_tile_count(&rect), expected);
        prop_assert_eq!(count_hextile_tiles(&e.payload, rect, fmt.bytes_per_pixel()), expected);
    }

    #[test]
    fn interleaved_zlib_sessions_stay_isolated(seeds in proptest::collection::vec(any::<u64>(), 2..8), enc_tight: bool) {
        let enc = if enc_tight { EncodingId::Tight } else { EncodingId::Zlib };
        let fmt = PixelFormat::canonical();
        let frames: Vec<(FrameBuffer, Rectangle)> = seeds.iter().map(|&s| framed(s, 40, 30, 20)).collect();

        // Session A alone.
        let mut solo = CompressionContext::new();
        let alone: Vec<Vec<EncodedRect>> = frames.iter().map(|(fb, r)| encode_rect(fb, *r, &fmt, enc, &mut solo).unwrap()).collect();

        // A and B interleaved, each with its own context; B encodes the frames in reverse.
        let (mut a, mut b) = (CompressionContext::new(), CompressionContext::new());
        let (mut da, mut db) = (DecompressionContext::new(), DecompressionContext::new());
        for (i, (fb, r)) in frames.iter().enumerate() {
            let ea = encode_rect(fb, *r, &fmt, enc, &mut a).unwrap();
            let (fb_b, r_b) = &frames[frames.len() - 1 - i];
            let eb = encode_rect(fb_b, *r_b, &fmt, enc, &mut b).unwrap();
            prop_assert_eq!(&ea, &alone[i]);
            for e in &ea {
                prop_assert_eq!(decode_rect(e, &fmt, &mut da).unwrap(), fb.extract(&e.rect, &fmt).unwrap());
            }
            for e in &eb {
                prop_assert_eq!(decode_rect(e, &fmt, &mut db).unwrap(), fb_b.extract(&e.rect, &fmt).unwrap());
            }
        }
    }

    #[test]
    fn last_sent_is_the_current_frame(seeds in proptest::collection::vec(any::<u64>(), 1..6), incremental in proptest::collection::vec(any::<bool>(), 6)) {
        let mut s = Session::new(1, 64, 48, &EncodingId::ALL);
        s.handle_set_encodings(&[EncodingId::Hextile.code()]);
        let mut mirror = FrameBuffer::new(64, 48, PixelFormat::canonical(), 0);
        for (i, seed) in seeds.iter().enumerate() {
            let fb = Arc::new(random_frame(*seed, 64, 48, 4));
            let inc = incremental[i] && i > 0;
            let reply = s.handle_update_request(fb.bounds(), inc, &fb).unwrap();
            prop_assert!(Arc::ptr_eq(s.last_sent().unwrap(), &fb));
            if !inc {
                prop_assert!(reply.is_some(), "non-incremental request deferred");
            }
            if let Some(u) = reply {
                let mut ctx = DecompressionContext::new();
                for e in &u.rects {
                    mirror.blit(&e.rect, &decode_rect(e, s.format(), &mut ctx).unwrap()).unwrap();
                }
            }
            // Whatever was sent leaves the client with the full frame.
            prop_assert_eq!(mirror.pixels(), fb.pixels());
        }
    }

    #[test]
    fn unchanged_screen_still_answers_full_requests(seed: u64, repeats in 1usize..5) {
        let fb = Arc::new(random_frame(seed, 32, 32, 3));
        let mut s = Session::new(1, 32, 32, &EncodingId::ALL);
        for _ in 0..repeats {
            prop_assert!(s.handle_update_request(fb.bounds(), false, &fb).unwrap().is_some());
            prop_assert!(s.handle_update_request(fb.bounds(), true, &fb).unwrap().is_none());
        }
    }

    #[test]
    fn fs_matches_reference_model(seed: u64) {
        let services = Services::new(Device::fixture());
        let mut model = FsModel::from_services(&services);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..60 {
            let op = random_fs_op(&mut rng);
            let want = model.apply(&op);
            prop_assert_eq!(run_fs_op(&services, &op), want, "op {} {:?}", i, op);
        }
    }

    #[test]
    fn fixture_stays_consistent(seed: u64) {
        let services = Services::new(Device::fixture());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            match rng.gen_range(0..5) {
                0 => {
                    let id = format!("org.test.app{}", rng.gen_range(0..4));
                    let _ = services.install_application(&id, &format!("1.{}", rng.gen_range(0..3)), b"pkg", rng.gen());
                }
                1 => {
                    let apps = services.list_applications(AppFilter::All);
                    if !apps.is_empty() {
                        let _ = services.uninstall_application(&apps[rng.gen_range(0..apps.len())].id);
                    }
                }
                2 => {
                    let rows = services.list_processes();
                    let pid = if rows.is_empty() || rng.gen_bool(0.2) { rng.gen_range(0..2000) } else { rows[rng.gen_range(0..rows.len())].pid };
                    let _ = services.kill_process(pid);
                }
                3 => {
                    let _ = services.shell_exec(["ps", "ls /data/app", "rm /sdcard/notes.txt", "echo hi"][rng.gen_range(0..4)]);
                }
                _ => {
                    let _ = services.fs_remove(&common::random_path(&mut rng), rng.gen());
                }
            }
            let state = services.device().state();
            prop_assert_eq!(state.check_consistency(), Ok(()));
        }
    }

    #[test]
    fn input_log_is_ordered(events in proptest::collection::vec((any::<u16>(), any::<u16>(), 0u8..8, any::<bool>(), 0u64..50), 1..60)) {
        let device = Device::new(DeviceState::fixture(), standard_workload(), SimClock::manual(0)).unwrap();
        let mut session = Session::new(3, 480, 800, &EncodingId::ALL);
        for (x, y, buttons, key, dt) in events {
            device.clock().advance(dt);
            let ev = if key { InputKind::Key { keysym: u32::from(x), down: buttons & 1 != 0 } } else { InputKind::Pointer { x, y, buttons } };
            inject_input(&mut session, ev, &device);
        }
        let state = device.state();
        let log = state.input.entries();
        prop_assert!(log.windows(2).all(|w| (w[0].t_ms, w[0].seq) < (w[1].t_ms, w[1].seq)));
        let on_screen = log.iter().all(|e| match e.kind {
            InputKind::Pointer { x, y, .. } => x < 480 && y < 800,
            InputKind::Key { .. } => true,
        });
        prop_assert!(on_screen);
    }

    #[test]
    fn channel_is_transparent(chunks in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..3000), 1..8), profile in 0usize..4, encrypted: bool) {
        let profile = match profile {
            0 => TransportProfile::unthrottled(),
            1 => TransportProfile::usb(),
            2 => TransportProfile::custom(Some(8.0 * 1024.0 * 1024.0), 0.5, 0.5).unwrap(),
            _ => TransportProfile::custom(None, 1.0, 0.0).unwrap(),
        };
        let (a, b) = pipe_pair();
        let sent: Vec<u8> = chunks.concat();
        let key = b"k3y";
        let nonce = [7u8; 16];
        let writer = std::thread::spawn(move || {
            let mut w: Box<dyn Write + Send> = if encrypted {
                Box::new(encrypt_channel(throttle(a, &profile), key, &nonce, Side::Server))
            } else {
                Box::new(throttle(a, &profile))
            };
            for c in chunks {
                w.write_all(&c).unwrap();
            }
            w.flush().unwrap();
        });
        let mut r: Box<dyn Read> = if encrypted { Box::new(encrypt_channel(b, key, &nonce, Side::Client)) } else { Box::new(b) };
        let mut got = vec![0; sent.len()];
        r.read_exact(&mut got).unwrap();
        writer.join().unwrap();
        prop_assert_eq!(got, sent);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn frames_are_deterministic(t in 0u64..10_000, seed in 0u64..4) {
        let mut script = standard_workload();
        script.seed = seed;
        let a = load_scenario(script.clone()).unwrap();
        let b = load_scenario(script).unwrap();
        // Out of order on one player, in order on the other.
        let _ = a.frame_at(10_000 - t);
        let (fa, fb) = (a.frame_at(t), b.frame_at(t));
        prop_assert_eq!(fa.pixels(), fb.pixels());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn uniform_screen_sizes(color in 0u32..0x0100_0000, wide: bool) {
        let fmt = formats()[usize::from(wide)];
        let bpp = fmt.bytes_per_pixel();
        let fb = FrameBuffer::new(480, 800, PixelFormat::canonical(), color);
        let size = |enc| -> usize {
            let mut ctx = CompressionContext::new();
            encode_rect(&fb, fb.bounds(), &fmt, enc, &mut ctx).unwrap().iter().map(|e| e.payload.len()).sum()
        };
        let [tight, zlib, hextile, rre, raw] =
            [EncodingId::Tight, EncodingId::Zlib, EncodingId::Hextile, EncodingId::Rre, EncodingId::Raw].map(size);
        prop_assert!(tight <= zlib, "tight {} zlib {}", tight, zlib);
        prop_assert!(hextile <= raw && rre <= raw);
        prop_assert_eq!(raw, 480 * 800 * bpp);
        // RRE needs only the background pixel, while Hextile still spends a
        // byte on each of the 1500 tiles.
        prop_assert_eq!(rre, 4 + bpp);
        prop_assert_eq!(hextile, 1 + bpp + 1499);
        // Deflate cannot beat about 1032:1, which puts a 32 bpp screen a few
        // bytes above Hextile.
        let deflate_floor = raw / 1032;
        prop_assert!(zlib >= deflate_floor);
        if bpp == 2 {
            prop_assert!(zlib <= hextile, "zlib {} hextile {}", zlib, hextile);
        } else {
            prop_assert!(zlib <= hextile + hextile / 50, "zlib {} hextile {}", zlib, hextile);
        }
    }
}
