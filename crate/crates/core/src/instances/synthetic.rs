//! Seeded synthetic grid instances with image-like structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SfmError};

use super::{make_region_blocks, GridInstance, InstanceFile, RegionFunctionSpec};

/// Parameters of [`gen_synthetic`]. All randomness comes from a `ChaCha8Rng`
/// seeded with `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub h: usize,
    pub w: usize,
    /// Unaries lie in `[−unary_scale, unary_scale]`.
    pub unary_scale: f64,
    /// Edge weights are `coupling_scale · exp(−(β Δ)²)`.
    pub coupling_scale: f64,
    /// Contrast sensitivity `β` applied to field differences `Δ`.
    pub beta: f64,
    pub regions: usize,
    /// Region functions are `region_scale / |R| · |S ∩ R| · |R ∖ S|`.
    pub region_scale: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            h: 16,
            w: 16,
            unary_scale: 1.0,
            coupling_scale: 1.0,
            beta: 4.0,
            regions: 0,
            region_scale: 0.5,
        }
    }
}

/// Bilinear interpolation of a coarse random lattice: a smooth field in `[−1, 1]`.
/// The lattice spacing grows with the grid, up to 8 pixels.
fn smooth_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Vec<f64> {
    let cells = (h.min(w) / 4).clamp(1, 8);
    let (gh, gw) = (h.div_ceil(cells) + 1, w.div_ceil(cells) + 1);
    let lattice: Vec<f64> = (0..gh * gw).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut field = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (fr, fc) = (r as f64 / cells as f64, c as f64 / cells as f64);
            let (r0, c0) = (fr.floor() as usize, fc.floor() as usize);
            let (tr, tc) = (fr - r0 as f64, fc - c0 as f64);
            let at = |i: usize, j: usize| lattice[i.min(gh - 1) * gw + j.min(gw - 1)];
            let top = at(r0, c0) * (1.0 - tc) + at(r0, c0 + 1) * tc;
            let bottom = at(r0 + 1, c0) * (1.0 - tc) + at(r0 + 1, c0 + 1) * tc;
            field.push(top * (1.0 - tr) + bottom * tr);
        }
    }
    field
}

/// Cut positions splitting `len` into `parts` nonempty intervals, with jitter.
fn jittered_cuts(rng: &mut ChaCha8Rng, len: usize, parts: usize) -> Vec<usize> {
    let mut cuts = vec![0];
    for k in 1..parts {
        let ideal = k * len / parts;
        let slack = (len / parts / 4) as i64;
        let j = if slack > 0 { rng.gen_range(-slack..=slack) } else { 0 };
        let lo = cuts[k - 1] + 1;
        let hi = len - (parts - k);
        cuts.push(((ideal as i64 + j) as usize).clamp(lo, hi));
    }
    cuts.push(len);
    cuts
}

/// Disjoint rectangular tiles with jittered boundaries, taken row by row.
fn region_tiles(rng: &mut ChaCha8Rng, h: usize, w: usize, count: usize) -> Vec<Vec<usize>> {
    if count == 0 {
        return Vec::new();
    }
    let ty = ((count as f64 * h as f64 / w as f64).sqrt().ceil() as usize).clamp(1, h);
    let tx = count.div_ceil(ty).min(w);
    let rows = jittered_cuts(rng, h, ty);
    let cols = jittered_cuts(rng, w, tx);
    let mut tiles = Vec::new();
    'outer: for a in 0..ty {
        for b in 0..tx {
            if tiles.len() == count {
                break 'outer;
            }
            let tile = (rows[a]..rows[a + 1])
                .flat_map(|r| (cols[b]..cols[b + 1]).map(move |c| r * w + c))
                .collect();
            tiles.push(tile);
        }
    }
    tiles
}

/// Deterministic grid instance: row and column chain blocks from a smooth random
/// field plus noise, followed by one concave block per region tile.
pub fn gen_synthetic(p: &SynthParams) -> Result<(GridInstance, InstanceFile)> {
    if p.h == 0 || p.w == 0 {
        return Err(SfmError::Config(format!("grid dimensions must be positive, got {}x{}", p.h, p.w)));
    }
    if p.regions > p.h * p.w {
        return Err(SfmError::Config(format!("{} regions do not fit in a {}x{} grid", p.regions, p.h, p.w)));
    }
    for (v, what) in [(p.unary_scale, "unary scale"), (p.coupling_scale, "coupling scale"), (p.beta, "beta"), (p.region_scale, "region scale")] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(SfmError::Config(format!("{what} must be nonnegative, got {v}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (h, w) = (p.h, p.w);
    let field = smooth_field(&mut rng, h, w);
    let unary: Vec<f64> = field
        .iter()
        .map(|f| {
            let noise: f64 = rng.gen_range(-1.0..=1.0);
            p.unary_scale * (0.7 * f + 0.3 * noise).clamp(-1.0, 1.0)
        })
        .collect();
    let weight = |i: usize, j: usize| {
        let d = p.beta * (field[i] - field[j]);
        p.coupling_scale * (-d * d).exp()
    };
    let mut w_h = Vec::with_capacity(h * (w - 1));
    for r in 0..h {
        for c in 0..w - 1 {
            w_h.push(weight(r * w + c, r * w + c + 1));
        }
    }
    let mut w_v = Vec::with_capacity((h - 1) * w);
    for r in 0..h - 1 {
        for c in 0..w {
            w_v.push(weight(r * w + c, (r + 1) * w + c));
        }
    }
    let grid = GridInstance::new(h, w, unary, w_h, w_v)?;
    let mut blocks: Vec<_> = grid.blocks()?.into();
    for tile in region_tiles(&mut rng, h, w, p.regions) {
        let spec = RegionFunctionSpec {
            scale: p.region_scale / tile.len() as f64,
            regions: vec![tile],
        };
        blocks.extend(make_region_blocks(h * w, &spec)?);
    }
    let file = InstanceFile {
        n: h * w,
        blocks,
        grid: Some((h, w)),
    };
    Ok((grid, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::SubsetMask;
    use crate::oracle::{brute_force_sfm, BRUTE_FORCE_CAP};

    fn params(seed: u64, h: usize, w: usize) -> SynthParams {
        SynthParams {
            seed,
            h,
            w,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let p = SynthParams {
            regions: 3,
            ..params(7, 6, 5)
        };
        let a = gen_synthetic(&p).unwrap().1.serialize();
        let b = gen_synthetic(&p).unwrap().1.serialize();
        assert_eq!(a, b);
        assert_ne!(a, gen_synthetic(&params(8, 6, 5)).unwrap().1.serialize());
    }

    #[test]
    fn regions_are_disjoint_nonempty_tiles() {
        let p = SynthParams {
            regions: 7,
            ..params(3, 9, 11)
        };
        let (_, f) = gen_synthetic(&p).unwrap();
        assert_eq!(f.blocks.len(), 9);
        let mut seen = SubsetMask::empty(99);
        for b in &f.blocks[2..] {
            let s = b.support_mask();
            assert!(!s.is_empty());
            assert!(seen.is_disjoint(&s));
            seen = seen.union(&s);
        }
    }

    #[test]
    fn zero_coupling_is_separable() {
        let p = SynthParams {
            coupling_scale: 0.0,
            ..params(11, 3, 4)
        };
        let (g, f) = gen_synthetic(&p).unwrap();
        let sol = brute_force_sfm(f.to_problem().unwrap().total(), BRUTE_FORCE_CAP).unwrap();
        let negative = SubsetMask::from_indices(12, (0..12).filter(|&i| g.unary[i] < 0.0));
        assert_eq!(sol.minimal, negative);
    }

    #[test]
    fn zero_unaries_make_empty_and_full_optimal() {
        let p = SynthParams {
            unary_scale: 0.0,
            regions: 2,
            ..params(5, 3, 3)
        };
        let (_, f) = gen_synthetic(&p).unwrap();
        let sol = brute_force_sfm(f.to_problem().unwrap().total(), BRUTE_FORCE_CAP).unwrap();
        assert_eq!(sol.min_value, 0.0);
        assert!(sol.minimal.is_empty() && sol.maximal.is_full());
    }

    #[test]
    fn bad_dimensions() {
        assert!(gen_synthetic(&params(0, 0, 3)).is_err());
        assert!(gen_synthetic(&SynthParams {
            regions: 10,
            ..params(0, 3, 3)
        })
        .is_err());
    }
}
