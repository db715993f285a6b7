//! Undecimated ("à trous") 2-D wavelet transform.
//!
//! Every subband keeps the spatial size of the input. Level `l` filters the previous
//! level's LL with taps spaced `2^(l-1)` apart, and all filtering wraps periodically.
//! Analysis is a true convolution, `y[n] = Σ_k f[k]·x[n - k·d]`.
//!
//! Subband names put the row-direction filter first: `LH` is low-pass along each row
//! and high-pass along each column.

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Names accepted by [`make_filter`].
pub const SUPPORTED_FILTERS: [&str; 5] = ["haar", "sym2", "sym4", "sym8", "sym19"];

const TABLE_TOLERANCE: f64 = 1e-10;

fn table(name: &str) -> Option<&'static str> {
    Some(match name {
        "haar" => include_str!("../filters/haar.txt"),
        "sym2" => include_str!("../filters/sym2.txt"),
        "sym4" => include_str!("../filters/sym4.txt"),
        "sym8" => include_str!("../filters/sym8.txt"),
        "sym19" => include_str!("../filters/sym19.txt"),
        _ => return None,
    })
}

/// Orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub name: String,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl FilterBank {
    /// Builds the bank from a decomposition low-pass table, rejecting tables that are
    /// not orthonormal.
    ///
    /// The high-pass is the quadrature mirror `dec_hi[k] = (-1)^k · dec_lo[L-1-k]`, and the
    /// reconstruction filters are the time-reverses of the decomposition filters.
    pub fn from_lowpass(name: &str, dec_lo: Vec<f64>) -> Result<Self> {
        let fail = |reason: String| Error::FilterIntegrity {
            name: name.to_string(),
            reason,
        };
        let len = dec_lo.len();
        if len < 2 || !len.is_multiple_of(2) {
            return Err(fail(format!("length {len} is not a positive even number")));
        }
        if dec_lo.iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite coefficient".into()));
        }
        let sum: f64 = dec_lo.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > TABLE_TOLERANCE {
            return Err(fail(format!("coefficients sum to {sum}, expected sqrt(2)")));
        }
        // Orthogonality to even shifts (m = 0 is the unit-energy condition).
        for m in 0..len / 2 {
            let s: f64 = (0..len - 2 * m)
                .map(|k| dec_lo[k] * dec_lo[k + 2 * m])
                .sum();
            let expect = if m == 0 { 1.0 } else { 0.0 };
            if (s - expect).abs() > TABLE_TOLERANCE {
                return Err(fail(format!(
                    "autocorrelation at shift {} is {s}, expected {expect}",
                    2 * m
                )));
            }
        }
        let dec_hi: Vec<f64> = (0..len)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * dec_lo[len - 1 - k])
            .collect();
        let rec_lo = dec_lo.iter().rev().copied().collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        Ok(FilterBank {
            name: name.to_string(),
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
        })
    }

    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }
}

/// Parses a coefficient table: one number per line, blank lines and `#` comments ignored.
pub fn parse_table(name: &str, text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>().map_err(|e| Error::FilterIntegrity {
                name: name.to_string(),
                reason: format!("cannot parse `{l}`: {e}"),
            })
        })
        .collect()
}

/// Loads one of the bundled filter banks.
pub fn make_filter(name: &str) -> Result<FilterBank> {
    let text = table(name).ok_or_else(|| Error::UnknownFilter {
        name: name.to_string(),
        supported: SUPPORTED_FILTERS.to_vec(),
    })?;
    FilterBank::from_lowpass(name, parse_table(name, text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubbandKind {
    LL,
    LH,
    HL,
    HH,
}

impl fmt::Display for SubbandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubbandKind::LL => "LL",
            SubbandKind::LH => "LH",
            SubbandKind::HL => "HL",
            SubbandKind::HH => "HH",
        })
    }
}

/// Identifies one entry of a [`SubbandPyramid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubbandId {
    pub kind: SubbandKind,
    pub level: usize,
}

impl fmt::Display for SubbandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind, self.level)
    }
}

/// Subband order for a `levels`-deep pyramid: `LL_L`, then `LH, HL, HH` for
/// levels `L` down to 1.
pub fn subband_ids(levels: usize) -> Vec<SubbandId> {
    let mut ids = vec![SubbandId {
        kind: SubbandKind::LL,
        level: levels,
    }];
    for level in (1..=levels).rev() {
        for kind in [SubbandKind::LH, SubbandKind::HL, SubbandKind::HH] {
            ids.push(SubbandId { kind, level });
        }
    }
    ids
}

/// Full-resolution subbands of a multi-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandPyramid {
    pub levels: usize,
    pub filter_name: String,
    /// Ordered as [`subband_ids`].
    pub subbands: Vec<Tensor>,
}

impl SubbandPyramid {
    pub fn zeros(shape: [usize; 4], levels: usize, filter_name: &str) -> Self {
        SubbandPyramid {
            levels,
            filter_name: filter_name.to_string(),
            subbands: vec![Tensor::zeros(shape); 3 * levels + 1],
        }
    }

    pub fn ids(&self) -> Vec<SubbandId> {
        subband_ids(self.levels)
    }

    pub fn len(&self) -> usize {
        self.subbands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subbands.is_empty()
    }

    pub fn get(&self, id: SubbandId) -> Option<&Tensor> {
        self.ids()
            .iter()
            .position(|&i| i == id)
            .map(|p| &self.subbands[p])
    }

    /// Shape shared by every subband.
    pub fn shape(&self) -> Result<[usize; 4]> {
        if self.levels == 0 {
            return Err(Error::shape("pyramid has zero levels"));
        }
        if self.subbands.len() != 3 * self.levels + 1 {
            return Err(Error::shape(format!(
                "{} levels need {} subbands, found {}",
                self.levels,
                3 * self.levels + 1,
                self.subbands.len()
            )));
        }
        let shape = self.subbands[0].shape();
        if let Some(bad) = self.subbands.iter().find(|s| s.shape() != shape) {
            return Err(Error::shape(format!(
                "subband shape {:?} differs from {:?}",
                bad.shape(),
                shape
            )));
        }
        Ok(shape)
    }

    /// Inner product summed over all subbands.
    pub fn dot(&self, other: &SubbandPyramid) -> Result<f64> {
        if self.subbands.len() != other.subbands.len() {
            return Err(Error::shape("pyramids have different subband counts"));
        }
        self.subbands
            .iter()
            .zip(&other.subbands)
            .map(|(a, b)| a.dot(b))
            .sum()
    }
}

#[derive(Clone, Copy)]
enum Axis {
    Rows,
    Cols,
}

/// Periodic dilated filtering along one axis. `adjoint` flips the direction of the
/// taps, which turns the convolution into its transpose.
fn filter_axis(x: &Tensor, f: &[f64], dilation: usize, axis: Axis, adjoint: bool) -> Tensor {
    let [b, c, h, w] = x.shape();
    let n = match axis {
        Axis::Rows => w,
        Axis::Cols => h,
    };
    let offsets: Vec<usize> = (0..f.len())
        .map(|k| {
            let s = (k * dilation) % n;
            if adjoint {
                s
            } else {
                (n - s) % n
            }
        })
        .collect();
    let mut out = Tensor::zeros(x.shape());
    let src = x.data();
    let dst = out.data_mut();
    for plane in 0..b * c {
        let base = plane * h * w;
        match axis {
            Axis::Rows => {
                for y in 0..h {
                    let row = &src[base + y * w..base + (y + 1) * w];
                    let orow = &mut dst[base + y * w..base + (y + 1) * w];
                    for (&coef, &off) in f.iter().zip(&offsets) {
                        for (xi, o) in orow.iter_mut().enumerate() {
                            *o += coef * row[(xi + off) % w];
                        }
                    }
                }
            }
            Axis::Cols => {
                for y in 0..h {
                    let orow = base + y * w;
                    for (&coef, &off) in f.iter().zip(&offsets) {
                        let srow = base + ((y + off) % h) * w;
                        for xi in 0..w {
                            dst[orow + xi] += coef * src[srow + xi];
                        }
                    }
                }
            }
        }
    }
    out
}

/// One analysis level: `[LL, LH, HL, HH]`.
fn analyze_level(x: &Tensor, bank: &FilterBank, dilation: usize) -> [Tensor; 4] {
    let lo = filter_axis(x, &bank.dec_lo, dilation, Axis::Rows, false);
    let hi = filter_axis(x, &bank.dec_hi, dilation, Axis::Rows, false);
    [
        filter_axis(&lo, &bank.dec_lo, dilation, Axis::Cols, false),
        filter_axis(&lo, &bank.dec_hi, dilation, Axis::Cols, false),
        filter_axis(&hi, &bank.dec_lo, dilation, Axis::Cols, false),
        filter_axis(&hi, &bank.dec_hi, dilation, Axis::Cols, false),
    ]
}

/// Transpose of [`analyze_level`].
fn adjoint_level(bands: [&Tensor; 4], bank: &FilterBank, dilation: usize) -> Tensor {
    let [ll, lh, hl, hh] = bands;
    let mut lo = filter_axis(ll, &bank.dec_lo, dilation, Axis::Cols, true);
    lo.add_assign(&filter_axis(lh, &bank.dec_hi, dilation, Axis::Cols, true))
        .expect("equal shapes");
    let mut hi = filter_axis(hl, &bank.dec_lo, dilation, Axis::Cols, true);
    hi.add_assign(&filter_axis(hh, &bank.dec_hi, dilation, Axis::Cols, true))
        .expect("equal shapes");
    let mut out = filter_axis(&lo, &bank.dec_lo, dilation, Axis::Rows, true);
    out.add_assign(&filter_axis(&hi, &bank.dec_hi, dilation, Axis::Rows, true))
        .expect("equal shapes");
    out
}

fn dilation(level: usize) -> usize {
    1 << (level - 1)
}

/// Multi-level forward transform of a single-channel image (any batch size).
pub fn swt_forward(image: &Tensor, bank: &FilterBank, levels: usize) -> Result<SubbandPyramid> {
    if levels < 1 {
        return Err(Error::config("levels must be at least 1"));
    }
    if image.channels() != 1 {
        return Err(Error::shape(format!(
            "swt_forward expects a single-channel image, got {} channels (convert to Y first)",
            image.channels()
        )));
    }
    if image.height() == 0 || image.width() == 0 {
        return Err(Error::shape("swt_forward: empty image"));
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = image.clone();
    for level in 1..=levels {
        let [ll, lh, hl, hh] = analyze_level(&current, bank, dilation(level));
        details.push([lh, hl, hh]);
        current = ll;
    }
    let mut subbands = vec![current];
    for d in details.into_iter().rev() {
        subbands.extend(d);
    }
    Ok(SubbandPyramid {
        levels,
        filter_name: bank.name.clone(),
        subbands,
    })
}

fn check_bank(pyramid: &SubbandPyramid, bank: &FilterBank) -> Result<[usize; 4]> {
    if pyramid.filter_name != bank.name {
        return Err(Error::config(format!(
            "pyramid was built with `{}` but filter `{}` was given",
            pyramid.filter_name, bank.name
        )));
    }
    pyramid.shape()
}

fn synthesize(pyramid: &SubbandPyramid, bank: &FilterBank, gain: f64) -> Result<Tensor> {
    check_bank(pyramid, bank)?;
    let mut current = pyramid.subbands[0].clone();
    for (i, level) in (1..=pyramid.levels).rev().enumerate() {
        let d = &pyramid.subbands[1 + 3 * i..4 + 3 * i];
        current = adjoint_level([&current, &d[0], &d[1], &d[2]], bank, dilation(level));
        if gain != 1.0 {
            current = current.scale(gain);
        }
    }
    Ok(current)
}

/// Inverse transform: each level applies the synthesis filters and divides by the
/// redundancy factor 4, starting from the deepest level.
pub fn swt_inverse(pyramid: &SubbandPyramid, bank: &FilterBank) -> Result<Tensor> {
    synthesize(pyramid, bank, 0.25)
}

/// Transpose of [`swt_forward`]: `<swt_forward(x), p> = <x, swt_adjoint(p)>`.
pub fn swt_adjoint(pyramid: &SubbandPyramid, bank: &FilterBank) -> Result<Tensor> {
    synthesize(pyramid, bank, 1.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn img(h: usize, w: usize, seed: u64) -> Tensor {
        Tensor::random_uniform([1, 1, h, w], -1.0, 1.0, &mut rng(seed))
    }

    /// Non-separable brute force: `Σ_{i,j} fcol[i]·frow[j]·x[y - i·d, x - j·d]`.
    fn direct_subband(x: &Tensor, frow: &[f64], fcol: &[f64], d: usize) -> Tensor {
        let (h, w) = (x.height() as isize, x.width() as isize);
        Tensor::from_fn(x.shape(), |b, c, y, xx| {
            let mut acc = 0.0;
            for (i, fc) in fcol.iter().enumerate() {
                for (j, fr) in frow.iter().enumerate() {
                    let sy = (y as isize - (i * d) as isize).rem_euclid(h) as usize;
                    let sx = (xx as isize - (j * d) as isize).rem_euclid(w) as usize;
                    acc += fc * fr * x.at(b, c, sy, sx);
                }
            }
            acc
        })
    }

    #[test]
    fn haar_coefficients() {
        let f = make_filter("haar").unwrap();
        assert_eq!(f.dec_lo, vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert_eq!(f.dec_hi, vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2]);
        assert_eq!(f.rec_lo, f.dec_lo);
        assert_eq!(f.rec_hi, vec![-FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    }

    #[test]
    fn bundled_tables_satisfy_invariants() {
        for name in SUPPORTED_FILTERS {
            let f = make_filter(name).unwrap();
            let l = f.len();
            assert!((f.dec_lo.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-10);
            assert!((f.dec_lo.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-10);
            for k in 0..l {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert!((f.dec_hi[k] - sign * f.dec_lo[l - 1 - k]).abs() < 1e-10);
                assert_eq!(f.rec_lo[k], f.dec_lo[l - 1 - k]);
                assert_eq!(f.rec_hi[k], f.dec_hi[l - 1 - k]);
            }
        }
        assert_eq!(make_filter("sym19").unwrap().len(), 38);
        assert_eq!(make_filter("sym4").unwrap().len(), 8);
    }

    #[test]
    fn unknown_filter_lists_supported() {
        let err = make_filter("db99").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::UnknownFilter { .. }));
        assert!(msg.contains("db99") && msg.contains("sym19") && msg.contains("haar"));
    }

    #[test]
    fn corrupted_table_fails_integrity() {
        let mut lo = make_filter("sym4").unwrap().dec_lo;
        lo[3] += 1e-6;
        assert!(matches!(
            FilterBank::from_lowpass("bad", lo),
            Err(Error::FilterIntegrity { .. })
        ));
        // Sums to sqrt(2) with unit energy is not enough: shifted orthogonality must hold.
        let s = 2f64.sqrt();
        let lo = vec![s / 2.0, 0.0, 0.0, s / 2.0];
        assert!(FilterBank::from_lowpass("gappy", lo).is_ok());
        let lo = vec![s / 2.0, 0.0, s / 2.0, 0.0];
        assert!(matches!(
            FilterBank::from_lowpass("aliased", lo),
            Err(Error::FilterIntegrity { .. })
        ));
        assert!(FilterBank::from_lowpass("odd", vec![1.0, 0.0, 0.414]).is_err());
        assert!(parse_table("x", "0.5\nnope\n").is_err());
    }

    #[test]
    fn constant_image_haar() {
        let f = make_filter("haar").unwrap();
        let p = swt_forward(&Tensor::full([1, 1, 6, 5], 0.3), &f, 1).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.subbands[0].data().iter().all(|v| (v - 0.6).abs() < 1e-15));
        for s in &p.subbands[1..] {
            assert!(s.max_abs() < 1e-15);
        }
    }

    #[test]
    fn hand_traced_two_by_two() {
        let f = make_filter("haar").unwrap();
        let x = Tensor::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = swt_forward(&x, &f, 1).unwrap();
        let expect = [
            [5.0, 5.0, 5.0, 5.0],
            [-2.0, -2.0, 2.0, 2.0],
            [-1.0, 1.0, -1.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for (s, e) in p.subbands.iter().zip(expect) {
            for (a, b) in s.data().iter().zip(e) {
                assert!((a - b).abs() < 1e-14, "{:?} vs {e:?}", s.data());
            }
        }
        let back = swt_inverse(&p, &f).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-14);
        // LL-only pyramid: adjoint spreads 1 over a 2x2 box, so the inverse is 1/8 everywhere.
        let mut q = SubbandPyramid::zeros([1, 1, 2, 2], 1, "haar");
        q.subbands[0].set(0, 0, 0, 0, 1.0);
        let r = swt_inverse(&q, &f).unwrap();
        assert!(r.data().iter().all(|v| (v - 0.125).abs() < 1e-15));
    }

    #[test]
    fn impulse_matches_direct_dilated_convolution() {
        let mut x = Tensor::zeros([1, 1, 8, 8]);
        x.set(0, 0, 2, 2, 1.0);
        for (name, levels) in [("haar", 1), ("haar", 2), ("sym4", 2)] {
            let f = make_filter(name).unwrap();
            let p = swt_forward(&x, &f, levels).unwrap();
            // Rebuild with the brute-force oracle level by level.
            let mut cur = x.clone();
            let mut expect = Vec::new();
            for level in 1..=levels {
                let d = 1 << (level - 1);
                let ll = direct_subband(&cur, &f.dec_lo, &f.dec_lo, d);
                expect.push([
                    direct_subband(&cur, &f.dec_lo, &f.dec_hi, d),
                    direct_subband(&cur, &f.dec_hi, &f.dec_lo, d),
                    direct_subband(&cur, &f.dec_hi, &f.dec_hi, d),
                ]);
                cur = ll;
            }
            let mut all = vec![cur];
            for e in expect.into_iter().rev() {
                all.extend(e);
            }
            for (a, b) in p.subbands.iter().zip(&all) {
                assert!(a.max_abs_diff(b).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn subband_counts_and_order() {
        let ids: Vec<String> = subband_ids(2).iter().map(|i| i.to_string()).collect();
        assert_eq!(ids, ["LL2", "LH2", "HL2", "HH2", "LH1", "HL1", "HH1"]);
        let f = make_filter("haar").unwrap();
        let p = swt_forward(&img(8, 8, 1), &f, 2).unwrap();
        assert_eq!(p.len(), 7);
        assert!(p.subbands.iter().all(|s| s.shape() == [1, 1, 8, 8]));
        assert!(p
            .get(SubbandId {
                kind: SubbandKind::HH,
                level: 1
            })
            .is_some());
    }

    #[test]
    fn argument_errors() {
        let f = make_filter("haar").unwrap();
        assert!(swt_forward(&img(4, 4, 1), &f, 0).is_err());
        assert!(swt_forward(&Tensor::zeros([1, 3, 4, 4]), &f, 1).is_err());
        let mut p = swt_forward(&img(4, 4, 1), &f, 1).unwrap();
        p.subbands[2] = Tensor::zeros([1, 1, 4, 5]);
        assert!(swt_inverse(&p, &f).is_err());
        assert!(swt_adjoint(&p, &f).is_err());
        let p = swt_forward(&img(4, 4, 1), &f, 1).unwrap();
        assert!(swt_inverse(&p, &make_filter("sym2").unwrap()).is_err());
    }

    #[test]
    fn zero_pyramid_maps_to_zero() {
        let f = make_filter("sym4").unwrap();
        let p = SubbandPyramid::zeros([1, 1, 6, 6], 2, "sym4");
        assert_eq!(swt_inverse(&p, &f).unwrap(), Tensor::zeros([1, 1, 6, 6]));
        assert_eq!(swt_adjoint(&p, &f).unwrap(), Tensor::zeros([1, 1, 6, 6]));
    }

    #[test]
    fn perfect_reconstruction_16x16() {
        for name in ["haar", "sym2", "sym8"] {
            let f = make_filter(name).unwrap();
            let x = img(16, 16, 3);
            for levels in 1..=3 {
                let p = swt_forward(&x, &f, levels).unwrap();
                assert!(swt_inverse(&p, &f).unwrap().max_abs_diff(&x).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn tight_frame_against_explicit_matrix() {
        // Columns of the explicit 64x16 analysis matrix for a 4x4 image.
        for name in ["haar", "sym2", "sym4"] {
            let f = make_filter(name).unwrap();
            let cols: Vec<Vec<f64>> = (0..16)
                .map(|i| {
                    let mut e = Tensor::zeros([1, 1, 4, 4]);
                    e.data_mut()[i] = 1.0;
                    let p = swt_forward(&e, &f, 1).unwrap();
                    p.subbands.iter().flat_map(|s| s.data().to_vec()).collect()
                })
                .collect();
            for i in 0..16 {
                for j in 0..16 {
                    let g: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                    let expect = if i == j { 4.0 } else { 0.0 };
                    assert!((g - expect).abs() < 1e-9, "{name} gram[{i}][{j}] = {g}");
                }
            }
            let x = img(4, 4, 9);
            let back = swt_adjoint(&swt_forward(&x, &f, 1).unwrap(), &f).unwrap();
            assert!(back.max_abs_diff(&x.scale(4.0)).unwrap() < 1e-9);
        }
    }

    #[test]
    fn batched_input_is_transformed_per_item() {
        let f = make_filter("sym2").unwrap();
        let a = img(6, 7, 1);
        let b = img(6, 7, 2);
        let both = Tensor::stack_batch(&[a.clone(), b.clone()]).unwrap();
        let p = swt_forward(&both, &f, 2).unwrap();
        let pb = swt_forward(&b, &f, 2).unwrap();
        for (s, t) in p.subbands.iter().zip(&pb.subbands) {
            assert_eq!(&s.batch_item(1), t);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0,
                  h in 3usize..12, w in 3usize..12, levels in 1usize..3) {
            let f = make_filter("sym4").unwrap();
            let x = img(h, w, seed);
            let y = img(h, w, seed.wrapping_add(1));
            let mut combo = x.scale(a);
            combo.axpy(b, &y).unwrap();
            let pc = swt_forward(&combo, &f, levels).unwrap();
            let px = swt_forward(&x, &f, levels).unwrap();
            let py = swt_forward(&y, &f, levels).unwrap();
            for ((c, u), v) in pc.subbands.iter().zip(&px.subbands).zip(&py.subbands) {
                let mut expect = u.scale(a);
                expect.axpy(b, v).unwrap();
                prop_assert!(c.max_abs_diff(&expect).unwrap() <= 1e-10);
            }
        }

        #[test]
        fn shift_equivariant(seed in any::<u64>(), dy in -6isize..6, dx in -6isize..6, levels in 1usize..3) {
            let f = make_filter("sym8").unwrap();
            let x = img(10, 13, seed);
            let shifted = swt_forward(&x.roll(dy, dx), &f, levels).unwrap();
            let base = swt_forward(&x, &f, levels).unwrap();
            for (s, b) in shifted.subbands.iter().zip(&base.subbands) {
                prop_assert!(s.max_abs_diff(&b.roll(dy, dx)).unwrap() <= 1e-12);
            }
        }

        #[test]
        fn adjoint_identity(seed in any::<u64>(), levels in 1usize..3) {
            let f = make_filter("haar").unwrap();
            let x = img(16, 16, seed);
            let mut r = rng(seed ^ 0x5eed);
            let p = SubbandPyramid {
                levels,
                filter_name: "haar".into(),
                subbands: (0..3 * levels + 1)
                    .map(|_| Tensor::random_uniform([1, 1, 16, 16], -1.0, 1.0, &mut r))
                    .collect(),
            };
            let lhs = swt_forward(&x, &f, levels).unwrap().dot(&p).unwrap();
            let rhs = x.dot(&swt_adjoint(&p, &f).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }
    }
}
