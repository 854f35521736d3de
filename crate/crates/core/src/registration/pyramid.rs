use crate::volume::Slice;

/// Smallest side a pyramid level may have.
pub(crate) const MIN_LEVEL_SIZE: usize = 16;

/// 2x2 box reduction; coarse pixel `i` covers fine pixels `2i` and `2i + 1`.
pub(crate) fn downsample(s: &Slice) -> Slice {
    let (nx, ny) = s.dims();
    let (cx, cy) = ((nx / 2).max(1), (ny / 2).max(1));
    let mut out = Vec::with_capacity(cx * cy);
    for y in 0..cy {
        for x in 0..cx {
            let (x0, y0) = (2 * x, 2 * y);
            let (x1, y1) = ((x0 + 1).min(nx - 1), (y0 + 1).min(ny - 1));
            let sum = f64::from(s.get(x0, y0)) + f64::from(s.get(x1, y0)) + f64::from(s.get(x0, y1)) + f64::from(s.get(x1, y1));
            out.push((sum / 4.0) as f32);
        }
    }
    Slice::from_raw(cx, cy, out)
}

/// Level 0 is the input; at most `levels` entries, none smaller than [`MIN_LEVEL_SIZE`].
pub(crate) fn build(s: &Slice, levels: usize) -> Vec<Slice> {
    let mut out = vec![s.clone()];
    while out.len() < levels {
        let last = out.last().expect("non-empty");
        if last.nx().min(last.ny()) / 2 < MIN_LEVEL_SIZE {
            break;
        }
        out.push(downsample(last));
    }
    out
}

/// Maps a full-resolution coordinate to level `l`.
pub(crate) fn to_level(v: f64, l: usize) -> f64 {
    let s = (1u32 << l) as f64;
    (v - (s - 1.0) / 2.0) / s
}
