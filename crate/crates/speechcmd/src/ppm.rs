//! Binary PPM (P6) rendering of feature maps.

use speechcmd_core::dsp::FeatureMap;

/// Viridis anchor colours at equal spacing; the ramp interpolates linearly.
const ANCHORS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// 256-entry colour ramp from dark purple to yellow.
pub fn ramp() -> [[u8; 3]; 256] {
    let mut out = [[0u8; 3]; 256];
    let segments = (ANCHORS.len() - 1) as f64;
    for (i, px) in out.iter_mut().enumerate() {
        let pos = i as f64 / 255.0 * segments;
        let lo = (pos.floor() as usize).min(ANCHORS.len() - 2);
        let t = pos - lo as f64;
        for c in 0..3 {
            let a = ANCHORS[lo][c] as f64;
            let b = ANCHORS[lo + 1][c] as f64;
            px[c] = (a + (b - a) * t).round() as u8;
        }
    }
    out
}

/// One pixel per cell, low rows at the bottom, min..max mapped onto the ramp.
pub fn render(map: &FeatureMap) -> Vec<u8> {
    let lut = ramp();
    let (lo, hi) = (map.min(), map.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P6\n{} {}\n255\n", map.cols, map.rows).into_bytes();
    for r in (0..map.rows).rev() {
        for &v in map.row(r) {
            let idx = (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as usize;
            out.extend_from_slice(&lut[idx]);
        }
    }
    out
}
