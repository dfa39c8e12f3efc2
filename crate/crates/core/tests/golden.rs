//! Byte-exact protocol artifacts. Regenerate with REMOTEFRAME_BLESS=1.

mod common;

use common::{check_golden, golden_dir, golden_frame, golden_init as init, golden_update, handshake_transcript, GOLDEN_NONCE as NONCE, GOLDEN_SECRET as SECRET};
use remoteframe::encodings::{decode_rect, encode_rect, encode_tight_gradient, CompressionContext, DecompressionContext, EncodedRect, EncodingId};
use remoteframe::pixel::{PixelFormat, Rectangle};
use remoteframe::rfb::SERVER_NAME;
use remoteframe::transport::AuthPolicy;
use serde_json::{json, Value};
use std::sync::Arc;

#[test]
fn server_init_480x800() {
    let bytes = init().to_bytes();
    assert_eq!(&bytes[..4], &[0x01, 0xE0, 0x03, 0x20]);
    // 32 bpp, depth 24, little-endian, true colour, 255/255/255, shifts 16/8/0
    assert_eq!(&bytes[4..20], &[32, 24, 0, 1, 0, 255, 0, 255, 0, 255, 16, 8, 0, 0, 0, 0]);
    assert_eq!(&bytes[20..24], &(SERVER_NAME.len() as u32).to_be_bytes());
    assert_eq!(&bytes[24..], SERVER_NAME.as_bytes());
    check_golden("server_init_480x800.bin", &bytes);
}

#[test]
fn handshake_without_auth() {
    let t = handshake_transcript(AuthPolicy::None, None);
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines[0], format!("S {}", hex::encode(b"RFB 003.008\n")));
    assert_eq!(lines[1], format!("C {}", hex::encode(b"RFB 003.008\n")));
    assert_eq!(&lines[2..6], ["S 0101", "C 01", "S 00000000", "C 01"]);
    check_golden("handshake_none.txt", t.as_bytes());
}

#[test]
fn handshake_with_mac() {
    let t = handshake_transcript(AuthPolicy::shared_secret(SECRET.to_vec()).unwrap(), Some(SECRET));
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(&lines[2..5], ["S 0181", "C 81", &format!("S {}", hex::encode(NONCE))]);
    let mac = remoteframe::transport::compute_mac(SECRET, &NONCE, remoteframe::transport::ChannelKind::Rfb);
    assert_eq!(lines[5], format!("C {}", hex::encode(mac)));
    assert!(!t.contains(&hex::encode(SECRET)));
    check_golden("handshake_mac.txt", t.as_bytes());
}

#[test]
fn one_update_per_encoding() {
    let fb = Arc::new(golden_frame());
    for enc in EncodingId::ALL {
        let u = golden_update(&fb, enc);
        assert!(u.rects.iter().all(|r| r.encoding == enc));
        let bytes = u.to_bytes();
        assert_eq!(&bytes[..2], &[0, 0]);
        assert_eq!(u16::from_be_bytes([bytes[2], bytes[3]]) as usize, u.rects.len());
        check_golden(&format!("update_{}.bin", enc.name()), &bytes);
    }
}

fn vector_rects() -> [Rectangle; 3] {
    [Rectangle::new(0, 0, 48, 32), Rectangle::new(3, 5, 20, 12), Rectangle::new(25, 14, 23, 18)]
}

fn pixels_hex(px: &[u32]) -> String {
    px.iter().map(|p| format!("{p:08x}")).collect()
}

/// Encoded rectangles with their expected pixels, grouped so that each
/// group is decoded in order with one decompression context.
fn build_vectors() -> Value {
    let fb = golden_frame();
    let mut groups = Vec::new();
    for fmt in [PixelFormat::canonical(), PixelFormat::rgb565()] {
        for enc in EncodingId::ALL {
            let mut ctx = CompressionContext::new();
            let mut rects = Vec::new();
            let mut encoded = Vec::new();
            for r in vector_rects() {
                encoded.extend(encode_rect(&fb, r, &fmt, enc, &mut ctx).unwrap());
            }
            if enc == EncodingId::Tight {
                // Too small for the server to pick the gradient filter on its own.
                encoded.push(encode_tight_gradient(&fb, fb.bounds(), &fmt, &mut ctx).unwrap());
            }
            for e in encoded {
                rects.push(json!({
                    "x": e.rect.x, "y": e.rect.y, "w": e.rect.w, "h": e.rect.h,
                    "payload": hex::encode(&e.payload),
                    "pixels": pixels_hex(&fb.extract(&e.rect, &fmt).unwrap()),
                }));
            }
            groups.push(json!({
                "encoding": enc.name(),
                "code": enc.code(),
                "pixel_format": hex::encode(fmt.to_wire()),
                "rects": rects,
            }));
        }
    }
    json!({ "frame": { "width": fb.width(), "height": fb.height() }, "groups": groups })
}

#[test]
fn shared_vectors() {
    let mut text = serde_json::to_string_pretty(&build_vectors()).unwrap();
    text.push('\n');
    check_golden("vectors.json", text.as_bytes());

    // The checked-in vectors decode with this crate's decoders.
    let v: Value = serde_json::from_slice(&std::fs::read(golden_dir().join("vectors.json")).unwrap()).unwrap();
    let mut checked = 0;
    for g in v["groups"].as_array().unwrap() {
        let wire: [u8; 16] = hex::decode(g["pixel_format"].as_str().unwrap()).unwrap().try_into().unwrap();
        let fmt = PixelFormat::from_wire(&wire).unwrap();
        let encoding = EncodingId::from_code(g["code"].as_i64().unwrap() as i32).unwrap();
        let mut ctx = DecompressionContext::new();
        for r in g["rects"].as_array().unwrap() {
            let n = |k: &str| r[k].as_u64().unwrap() as u16;
            let enc = EncodedRect {
                rect: Rectangle::new(n("x"), n("y"), n("w"), n("h")),
                encoding,
                payload: hex::decode(r["payload"].as_str().unwrap()).unwrap(),
            };
            assert_eq!(pixels_hex(&decode_rect(&enc, &fmt, &mut ctx).unwrap()), r["pixels"].as_str().unwrap());
            checked += 1;
        }
    }
    assert!(checked >= 36);
}

#[test]
fn workload_scenario_file() {
    use remoteframe::device::{standard_workload, ScenarioScript};
    let script = standard_workload();
    check_golden("workload.toml", script.to_toml().as_bytes());
    let loaded = ScenarioScript::load(&golden_dir().join("workload.toml")).unwrap();
    assert_eq!(loaded.to_toml(), script.to_toml());
}
