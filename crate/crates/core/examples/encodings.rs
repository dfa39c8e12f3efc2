//! Encodes one screen of each kind with every encoding and checks the
//! round trip.

use remoteframe::device::{load_scenario, standard_workload};
use remoteframe::encodings::{decode_rect, encode_rect, CompressionContext, DecompressionContext, EncodingId};
use remoteframe::pixel::PixelFormat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let player = load_scenario(standard_workload())?;
    for (label, t) in [("home", 500), ("browser", 2_500), ("music", 6_000)] {
        let fb = player.frame_at(t);
        for fmt in [PixelFormat::canonical(), PixelFormat::rgb565()] {
            println!("{label} screen, {} bpp", fmt.bits_per_pixel);
            let raw = fb.pixels().len() * fmt.bytes_per_pixel();
            for enc in EncodingId::ALL {
                let mut ctx = CompressionContext::new();
                let mut dctx = DecompressionContext::new();
                let rects = encode_rect(&fb, fb.bounds(), &fmt, enc, &mut ctx)?;
                let bytes: usize = rects.iter().map(|r| r.payload.len()).sum();
                for r in &rects {
                    assert_eq!(decode_rect(r, &fmt, &mut dctx)?, fb.extract(&r.rect, &fmt)?);
                }
                println!("  {:<8} {:>8} bytes  {:>3} rects  ratio {:>6.2}", enc.name(), bytes, rects.len(), raw as f64 / bytes as f64);
            }
        }
    }
    Ok(())
}
