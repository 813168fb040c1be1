//! Multilevel discrete wavelet analysis and synthesis for the three filter
//! families used to describe τ-segments.
//!
//! Filters follow the usual two-channel convention: analysis output `k` of a
//! subband is `Σ_j f[j] · x[2k + 1 − j]` over the extended signal. With
//! half-sample symmetric extension each level maps `n` samples to
//! `⌊(n + F − 1) / 2⌋` coefficients per subband (`F` = filter length);
//! periodization maps `n` (even) to `n / 2` and is orthonormal for the
//! orthogonal families.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_LEVEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Db3,
    Coif5,
    Bior2_4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Padding {
    /// Half-sample symmetric extension: `x[-1] = x[0]`, `x[n] = x[n-1]`.
    Symmetric,
    /// Circular extension; every level input must have even length.
    Periodization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveletSpec {
    pub family: Family,
    pub level: usize,
    pub padding: Padding,
}

/// Decomposition and reconstruction filter quadruple.
#[derive(Debug, Clone, Copy)]
pub struct FilterBank {
    pub dec_lo: &'static [f64],
    pub dec_hi: &'static [f64],
    pub rec_lo: &'static [f64],
    pub rec_hi: &'static [f64],
}

impl FilterBank {
    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }
}

const DB3_DEC_LO: [f64; 6] = [
    0.03522629188570953,
    -0.08544127388202666,
    -0.13501102001025458,
    0.45987750211849154,
    0.8068915093110925,
    0.33267055295008263,
];
const DB3_DEC_HI: [f64; 6] = [
    -0.33267055295008263,
    0.8068915093110925,
    -0.45987750211849154,
    -0.13501102001025458,
    0.08544127388202666,
    0.03522629188570953,
];
const DB3_REC_LO: [f64; 6] = [
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
];
const DB3_REC_HI: [f64; 6] = [
    0.03522629188570953,
    0.08544127388202666,
    -0.13501102001025458,
    -0.45987750211849154,
    0.8068915093110925,
    -0.33267055295008263,
];

const COIF5_DEC_LO: [f64; 30] = [
    -9.604010112767894e-08,
    -1.6237995172048338e-07,
    2.0612203985788783e-06,
    3.7007277113394796e-06,
    -2.1270221672515614e-05,
    -4.12198619242655e-05,
    0.00014035632812373243,
    0.0003018579416682448,
    -0.0006375589261258812,
    -0.0016616273039298788,
    0.0024315754425382886,
    0.006761520220620417,
    -0.009159507338676163,
    -0.019758391600965465,
    0.032674799467057355,
    0.041287530472117834,
    -0.10556315130733723,
    -0.06203775157498196,
    0.4379823066591634,
    0.7742936228603274,
    0.42157126673075435,
    -0.052046670253554764,
    -0.09192158806008609,
    0.028169744270532353,
    0.023408322118927783,
    -0.010131584846900276,
    -0.00415931262757864,
    0.0021782943778456947,
    0.0003585777411617577,
    -0.000212081862067494,
];

/// Alternating-sign mirror `g[k] = (-1)^(k+1) h[F-1-k]` of an orthogonal low-pass.
const fn qmf<const F: usize>(lo: &[f64; F]) -> [f64; F] {
    let mut out = [0.0; F];
    let mut k = 0;
    while k < F {
        let v = lo[F - 1 - k];
        out[k] = if k % 2 == 0 { -v } else { v };
        k += 1;
    }
    out
}

const fn reversed<const F: usize>(f: &[f64; F]) -> [f64; F] {
    let mut out = [0.0; F];
    let mut k = 0;
    while k < F {
        out[k] = f[F - 1 - k];
        k += 1;
    }
    out
}

const COIF5_DEC_HI: [f64; 30] = qmf(&COIF5_DEC_LO);
const COIF5_REC_LO: [f64; 30] = reversed(&COIF5_DEC_LO);
const COIF5_REC_HI: [f64; 30] = reversed(&COIF5_DEC_HI);

const BIOR24_DEC_LO: [f64; 10] = [
    0.0,
    0.03314563036811941,
    -0.06629126073623882,
    -0.1767766952966369,
    0.4198446513295126,
    0.9943689110435825,
    0.4198446513295126,
    -0.1767766952966369,
    -0.06629126073623882,
    0.03314563036811941,
];
#[allow(clippy::approx_constant)]
const BIOR24_DEC_HI: [f64; 10] = [
    0.0,
    0.0,
    0.0,
    0.3535533905932738,
    -0.7071067811865476,
    0.3535533905932738,
    0.0,
    0.0,
    0.0,
    0.0,
];
#[allow(clippy::approx_constant)]
const BIOR24_REC_LO: [f64; 10] = [
    0.0,
    0.0,
    0.0,
    0.3535533905932738,
    0.7071067811865476,
    0.3535533905932738,
    0.0,
    0.0,
    0.0,
    0.0,
];
const BIOR24_REC_HI: [f64; 10] = [
    0.0,
    -0.03314563036811941,
    -0.06629126073623882,
    0.1767766952966369,
    0.4198446513295126,
    -0.9943689110435825,
    0.4198446513295126,
    0.1767766952966369,
    -0.06629126073623882,
    -0.03314563036811941,
];

impl Family {
    pub const ALL: [Family; 3] = [Family::Db3, Family::Coif5, Family::Bior2_4];

    pub fn name(self) -> &'static str {
        match self {
            Family::Db3 => "db3",
            Family::Coif5 => "coif5",
            Family::Bior2_4 => "bior2.4",
        }
    }

    pub fn filters(self) -> FilterBank {
        match self {
            Family::Db3 => FilterBank {
                dec_lo: &DB3_DEC_LO,
                dec_hi: &DB3_DEC_HI,
                rec_lo: &DB3_REC_LO,
                rec_hi: &DB3_REC_HI,
            },
            Family::Coif5 => FilterBank {
                dec_lo: &COIF5_DEC_LO,
                dec_hi: &COIF5_DEC_HI,
                rec_lo: &COIF5_REC_LO,
                rec_hi: &COIF5_REC_HI,
            },
            Family::Bior2_4 => FilterBank {
                dec_lo: &BIOR24_DEC_LO,
                dec_hi: &BIOR24_DEC_HI,
                rec_lo: &BIOR24_REC_LO,
                rec_hi: &BIOR24_REC_HI,
            },
        }
    }

    pub fn filter_len(self) -> usize {
        self.filters().len()
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, Family::Bior2_4)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], ".");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown wavelet family `{s}`")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Padding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(Padding::Symmetric),
            "periodization" => Ok(Padding::Periodization),
            other => Err(Error::Parse(format!("unknown padding `{other}`"))),
        }
    }
}

impl fmt::Display for Padding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Padding::Symmetric => "symmetric",
            Padding::Periodization => "periodization",
        })
    }
}

impl WaveletSpec {
    pub fn new(family: Family, level: usize) -> Result<Self> {
        Self::with_padding(family, level, Padding::Symmetric)
    }

    pub fn with_padding(family: Family, level: usize, padding: Padding) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::Config(format!(
                "wavelet level {level} outside [1, {MAX_LEVEL}]"
            )));
        }
        Ok(WaveletSpec {
            family,
            level,
            padding,
        })
    }
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/L{}", self.family, self.level)?;
        if self.padding != Padding::Symmetric {
            write!(f, "/{}", self.padding)?;
        }
        Ok(())
    }
}

fn next_length(n: usize, filter_len: usize, padding: Padding) -> usize {
    match padding {
        Padding::Symmetric => (n + filter_len - 1) / 2,
        Padding::Periodization => n / 2,
    }
}

fn level_feasible(n: usize, filter_len: usize, padding: Padding) -> bool {
    n >= filter_len && (padding == Padding::Symmetric || n % 2 == 0)
}

/// Deepest level a segment of `n` samples supports (0 if none).
pub fn max_level(n: usize, family: Family, padding: Padding) -> usize {
    let f = family.filter_len();
    let mut len = n;
    let mut level = 0;
    while level < MAX_LEVEL && level_feasible(len, f, padding) {
        len = next_length(len, f, padding);
        level += 1;
    }
    level
}

/// Subband lengths `[n_1, …, n_L]` of the detail (and, at `L`, approximation) bands.
pub fn subband_lengths(n: usize, spec: &WaveletSpec) -> Result<Vec<usize>> {
    let f = spec.family.filter_len();
    let mut lens = Vec::with_capacity(spec.level);
    let mut len = n;
    for _ in 0..spec.level {
        if !level_feasible(len, f, spec.padding) {
            return Err(Error::Decomposition {
                length: n,
                requested: spec.level,
                max_level: max_level(n, spec.family, spec.padding),
            });
        }
        len = next_length(len, f, spec.padding);
        lens.push(len);
    }
    Ok(lens)
}

/// Length of the vector [`decompose`] returns, without computing it.
pub fn coefficient_length(segment_length: usize, spec: &WaveletSpec) -> Result<usize> {
    let lens = subband_lengths(segment_length, spec)?;
    Ok(lens.iter().sum::<usize>() + lens[spec.level - 1])
}

/// One analysis step; appends nothing, writes `lo`/`hi` of the returned length.
fn analysis_step(x: &[f64], bank: &FilterBank, padding: Padding, lo: &mut Vec<f64>, hi: &mut Vec<f64>) {
    let n = x.len();
    let f = bank.len();
    lo.clear();
    hi.clear();
    match padding {
        Padding::Symmetric => {
            // ext[p] holds x[p - (f - 1)] under half-sample reflection
            let pad = f - 1;
            let mut ext = Vec::with_capacity(n + 2 * pad);
            ext.extend((0..pad).rev().map(|k| x[k]));
            ext.extend_from_slice(x);
            ext.extend((0..pad).map(|k| x[n - 1 - k]));
            let out_len = (n + f - 1) / 2;
            for o in 0..out_len {
                let i = pad + 2 * o + 1;
                let (mut a, mut d) = (0.0, 0.0);
                for j in 0..f {
                    let v = ext[i - j];
                    a += bank.dec_lo[j] * v;
                    d += bank.dec_hi[j] * v;
                }
                lo.push(a);
                hi.push(d);
            }
        }
        Padding::Periodization => {
            for o in 0..n / 2 {
                let (mut a, mut d) = (0.0, 0.0);
                for j in 0..f {
                    let idx = (2 * o + 1 + n * f - j) % n;
                    a += bank.dec_lo[j] * x[idx];
                    d += bank.dec_hi[j] * x[idx];
                }
                lo.push(a);
                hi.push(d);
            }
        }
    }
}

/// Full multilevel analysis. Output layout is
/// `[approx_L, detail_L, detail_{L-1}, …, detail_1]`.
pub fn decompose(segment: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>> {
    let lens = subband_lengths(segment.len(), spec)?;
    let bank = spec.family.filters();
    let total = lens.iter().sum::<usize>() + lens[spec.level - 1];
    let mut out = vec![0.0; total];

    let mut approx = segment.to_vec();
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    // details are written back to front
    let mut end = total;
    for _ in 0..spec.level {
        analysis_step(&approx, &bank, spec.padding, &mut lo, &mut hi);
        out[end - hi.len()..end].copy_from_slice(&hi);
        end -= hi.len();
        std::mem::swap(&mut approx, &mut lo);
    }
    debug_assert_eq!(end, approx.len());
    out[..end].copy_from_slice(&approx);
    Ok(out)
}

fn synthesis_step(
    approx: &[f64],
    detail: &[f64],
    bank: &FilterBank,
    padding: Padding,
    out_len: usize,
) -> Vec<f64> {
    let f = bank.len();
    let n = approx.len();
    let mut x = vec![0.0; out_len];
    match padding {
        Padding::Symmetric => {
            // x[m] = Σ_k a[k] g[m − 2k + f − 2], keeping only in-range taps
            for m in 0..out_len {
                let mut s = 0.0;
                for k in 0..n {
                    let j = m as isize - 2 * k as isize + f as isize - 2;
                    if j < 0 {
                        break;
                    }
                    if (j as usize) < f {
                        s += approx[k] * bank.rec_lo[j as usize] + detail[k] * bank.rec_hi[j as usize];
                    }
                }
                x[m] = s;
            }
        }
        Padding::Periodization => {
            let len = out_len;
            for k in 0..n {
                for j in 0..f {
                    let m = (2 * k + j + len * f - (f - 2)) % len;
                    x[m] += approx[k] * bank.rec_lo[j] + detail[k] * bank.rec_hi[j];
                }
            }
        }
    }
    x
}

/// Inverse of [`decompose`] for a segment of `original_length` samples.
pub fn reconstruct(coefficients: &[f64], original_length: usize, spec: &WaveletSpec) -> Result<Vec<f64>> {
    let expected = coefficient_length(original_length, spec)?;
    if coefficients.len() != expected {
        return Err(Error::Shape(format!(
            "expected {expected} coefficients for {original_length} samples at {spec}, got {}",
            coefficients.len()
        )));
    }
    let lens = subband_lengths(original_length, spec)?;
    let bank = spec.family.filters();
    let top = lens[spec.level - 1];
    let mut approx = coefficients[..top].to_vec();
    let mut pos = top;
    for level in (0..spec.level).rev() {
        let detail = &coefficients[pos..pos + lens[level]];
        pos += lens[level];
        let target = if level == 0 { original_length } else { lens[level - 1] };
        approx = synthesis_step(&approx, detail, &bank, spec.padding, target);
    }
    Ok(approx)
}

/// Filter constants as CSV (`family,filter,index,value`) for audit.
pub fn filter_reference() -> String {
    let mut s = String::from("family,filter,index,value\n");
    for fam in Family::ALL {
        let b = fam.filters();
        for (name, taps) in [
            ("dec_lo", b.dec_lo),
            ("dec_hi", b.dec_hi),
            ("rec_lo", b.rec_lo),
            ("rec_hi", b.rec_hi),
        ] {
            for (i, v) in taps.iter().enumerate() {
                s.push_str(&format!("{},{name},{i},{v:e}\n", fam.name()));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_segment(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
    }

    /// Pads explicitly, convolves in full, then keeps odd-indexed outputs.
    fn oracle_level(x: &[f64], h: &[f64]) -> Vec<f64> {
        let n = x.len() as isize;
        let f = h.len() as isize;
        let reflect = |k: isize| -> f64 {
            if k < 0 {
                x[(-k - 1) as usize]
            } else if k >= n {
                x[(2 * n - 1 - k) as usize]
            } else {
                x[k as usize]
            }
        };
        let padded: Vec<f64> = (-(f - 1)..n + f - 1).map(reflect).collect();
        // full convolution of the padded signal
        let conv: Vec<f64> = (0..padded.len() + h.len() - 1)
            .map(|i| {
                (0..h.len())
                    .filter(|&j| i >= j && i - j < padded.len())
                    .map(|j| h[j] * padded[i - j])
                    .sum()
            })
            .collect();
        // conv index (f-1) + i corresponds to signal position i
        (0..(n + f - 1) / 2)
            .map(|o| conv[(f - 1 + 2 * o + 1) as usize])
            .collect()
    }

    fn oracle_decompose(x: &[f64], fam: Family, level: usize) -> Vec<f64> {
        let b = fam.filters();
        let mut approx = x.to_vec();
        let mut details = Vec::new();
        for _ in 0..level {
            let d = oracle_level(&approx, b.dec_hi);
            approx = oracle_level(&approx, b.dec_lo);
            details.push(d);
        }
        let mut out = approx;
        for d in details.into_iter().rev() {
            out.extend(d);
        }
        out
    }

    #[test]
    fn filter_lengths() {
        assert_eq!(Family::Db3.filter_len(), 6);
        assert_eq!(Family::Coif5.filter_len(), 30);
        assert_eq!(Family::Bior2_4.filter_len(), 10);
        for fam in Family::ALL {
            let b = fam.filters();
            let s: f64 = b.dec_lo.iter().sum();
            assert!((s - std::f64::consts::SQRT_2).abs() < 1e-12, "{fam}");
            assert!(b.dec_hi.iter().sum::<f64>().abs() < 1e-12, "{fam}");
            assert_eq!(b.dec_hi.len(), b.len());
            assert_eq!(b.rec_lo.len(), b.len());
        }
    }

    #[test]
    fn orthogonal_filters_have_unit_norm() {
        for fam in [Family::Db3, Family::Coif5] {
            let b = fam.filters();
            let n: f64 = b.dec_lo.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12, "{fam}: {n}");
        }
    }

    #[test]
    fn constant_segment_has_no_detail() {
        let x = vec![5.0; 288];
        for fam in Family::ALL {
            let spec = WaveletSpec::new(fam, 3).unwrap();
            let c = decompose(&x, &spec).unwrap();
            let lens = subband_lengths(288, &spec).unwrap();
            let approx = lens[2];
            assert!(c[approx..].iter().all(|v| v.abs() < 1e-9), "{fam}");
        }
    }

    #[test]
    fn zero_segment_has_zero_coefficients() {
        let spec = WaveletSpec::new(Family::Coif5, 3).unwrap();
        assert!(decompose(&[0.0; 288], &spec).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_convolution_oracle() {
        for (fam, level) in [(Family::Db3, 3), (Family::Bior2_4, 3), (Family::Coif5, 2)] {
            let x = random_segment(288, 11);
            let spec = WaveletSpec::new(fam, level).unwrap();
            let got = decompose(&x, &spec).unwrap();
            let want = oracle_decompose(&x, fam, level);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "{fam}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn frozen_reference_values() {
        // computed with an independent wavelet library, symmetric mode
        let x: Vec<f64> = (0..288).map(|i| (i as f64 * 0.37).sin() * 5.0 + i as f64 * 0.01).collect();
        let c = decompose(&x, &WaveletSpec::new(Family::Bior2_4, 3).unwrap()).unwrap();
        assert!((c[0] - 8.29329659903397).abs() < 1e-12);
        assert!((c[50] - 4.990600677330633).abs() < 1e-12);
        assert!((c[311] - 0.23607380411273682).abs() < 1e-12);
        let c = decompose(&x, &WaveletSpec::new(Family::Db3, 3).unwrap()).unwrap();
        assert!((c[0] - 6.677815213660898).abs() < 1e-12);
        assert!((c[100] + 1.15242208440092).abs() < 1e-12);
    }

    #[test]
    fn lengths_match_decompose() {
        let spec = WaveletSpec::new(Family::Db3, 3).unwrap();
        let measured = decompose(&vec![0.0; 288], &spec).unwrap().len();
        assert_eq!(coefficient_length(288, &spec).unwrap(), measured);
        // 288 -> 146 -> 75 -> 40; 40 + 40 + 75 + 146
        assert_eq!(measured, 301);

        for fam in Family::ALL {
            let f = fam.filter_len();
            for n in [f, 31, 64, 100, 288] {
                if n < f {
                    continue;
                }
                let spec = WaveletSpec::new(fam, 1).unwrap();
                assert_eq!(coefficient_length(n, &spec).unwrap(), 2 * ((n + f - 1) / 2));
                let oracle = oracle_level(&vec![1.0; n], fam.filters().dec_lo);
                assert_eq!(oracle.len(), (n + f - 1) / 2);
            }
        }
        let spec = WaveletSpec::new(Family::Bior2_4, 3).unwrap();
        assert_eq!(coefficient_length(288, &spec).unwrap(), 312);
    }

    #[test]
    fn too_short_reports_max_level() {
        let spec = WaveletSpec::new(Family::Coif5, 7).unwrap();
        match decompose(&[1.0; 64], &spec) {
            Err(Error::Decomposition { max_level, requested, .. }) => {
                assert_eq!(requested, 7);
                assert_eq!(max_level, max_level_for_test(64));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(coefficient_length(10, &spec).is_err());
    }

    fn max_level_for_test(n: usize) -> usize {
        // 64 -> 46 -> 37 -> 33 -> 31 -> 30 -> 29: six feasible levels for F = 30
        max_level(n, Family::Coif5, Padding::Symmetric)
    }

    #[test]
    fn coif5_levels_on_short_input() {
        assert_eq!(max_level_for_test(64), 6);
        assert_eq!(max_level(29, Family::Coif5, Padding::Symmetric), 0);
    }

    #[test]
    fn round_trip_all_families() {
        for fam in Family::ALL {
            for level in 3..=5 {
                for n in [288usize, 301, 512] {
                    let spec = WaveletSpec::new(fam, level).unwrap();
                    if coefficient_length(n, &spec).is_err() {
                        continue;
                    }
                    let x = random_segment(n, (n + level) as u64);
                    let c = decompose(&x, &spec).unwrap();
                    let y = reconstruct(&c, n, &spec).unwrap();
                    let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    assert!(err < 1e-8, "{spec} n={n}: {err}");
                }
            }
        }
    }

    #[test]
    fn periodized_round_trip_and_energy() {
        for fam in Family::ALL {
            for level in 3..=5 {
                let spec = WaveletSpec::with_padding(fam, level, Padding::Periodization).unwrap();
                let x = random_segment(1024, level as u64);
                let c = decompose(&x, &spec).unwrap();
                assert_eq!(c.len(), 1024);
                let y = reconstruct(&c, 1024, &spec).unwrap();
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8, "{spec}: {err}");
                if fam.is_orthogonal() {
                    let ex: f64 = x.iter().map(|v| v * v).sum();
                    let ec: f64 = c.iter().map(|v| v * v).sum();
                    assert!((ex - ec).abs() / ex < 1e-12, "{spec}");
                }
            }
        }
        let spec = WaveletSpec::with_padding(Family::Db3, 3, Padding::Periodization).unwrap();
        assert!(decompose(&[1.0; 100], &spec).is_err());
    }

    #[test]
    fn reconstruct_edge_cases() {
        let spec = WaveletSpec::new(Family::Bior2_4, 3).unwrap();
        let n = coefficient_length(288, &spec).unwrap();
        assert!(reconstruct(&vec![0.0; n], 288, &spec).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(
            reconstruct(&vec![0.0; n + 1], 288, &spec),
            Err(Error::Shape(_))
        ));
        let c = decompose(&[3.5; 288], &spec).unwrap();
        let y = reconstruct(&c, 288, &spec).unwrap();
        assert!(y.iter().all(|v| (v - 3.5).abs() < 1e-8));
    }

    #[test]
    fn level_bounds() {
        assert!(WaveletSpec::new(Family::Db3, 0).is_err());
        assert!(WaveletSpec::new(Family::Db3, 9).is_err());
        assert_eq!("Bior2.4".parse::<Family>().unwrap(), Family::Bior2_4);
        assert_eq!("bior2_4".parse::<Family>().unwrap(), Family::Bior2_4);
    }

    #[test]
    fn reference_lists_every_tap() {
        let csv = filter_reference();
        assert_eq!(csv.lines().count(), 1 + 4 * (6 + 30 + 10));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, fam in 0usize..3) {
                let spec = WaveletSpec::new(Family::ALL[fam], 3).unwrap();
                let x = random_segment(288, seed);
                let y = random_segment(288, seed ^ 0xabc);
                let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
                let cx = decompose(&x, &spec).unwrap();
                let cy = decompose(&y, &spec).unwrap();
                let cm = decompose(&mix, &spec).unwrap();
                for i in 0..cm.len() {
                    prop_assert!((cm[i] - (a * cx[i] + b * cy[i])).abs() < 1e-9);
                }
            }

            #[test]
            fn length_is_predicted(n in 30usize..700, fam in 0usize..3, level in 1usize..6) {
                let spec = WaveletSpec::new(Family::ALL[fam], level).unwrap();
                match coefficient_length(n, &spec) {
                    Ok(len) => prop_assert_eq!(decompose(&vec![0.5; n], &spec).unwrap().len(), len),
                    Err(_) => prop_assert!(decompose(&vec![0.5; n], &spec).is_err()),
                }
            }
        }
    }
}
