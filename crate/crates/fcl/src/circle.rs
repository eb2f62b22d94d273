//! A concrete truncated operator algebra on the unit circle: Fourier
//! multipliers, multiplication operators with Toeplitz band structure, the
//! Calderón projector onto nonnegative modes, compressions between
//! projection ranges, a rank-based Fredholm index, winding numbers, and an
//! entry-decay diagnostic standing in for the smoothing ideal.
//!
//! Modes run over −N..N (2N+1 of them, odd so modes pair symmetrically);
//! mode m lives at row/column m+N.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numlin::{op_norm, rank_tol, CMatrix, TolPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Multiplier,
    Multiplication,
    General,
}

/// An operator on the 2N+1 truncated Fourier modes of the circle.
#[derive(Debug, Clone)]
pub struct CircleOperator {
    n_modes: usize,
    matrix: CMatrix,
    kind: OperatorKind,
}

impl CircleOperator {
    pub fn new_general(n_modes: usize, matrix: CMatrix) -> Result<Self> {
        let dim = 2 * n_modes + 1;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Shape {
                position: 0,
                detail: format!("expected {dim}×{dim} matrix for truncation N={n_modes}"),
            });
        }
        Ok(CircleOperator {
            n_modes,
            matrix,
            kind: OperatorKind::General,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes + 1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Entry indexed by modes m (row), n (column), each in −N..N.
    pub fn entry(&self, m: i64, n: i64) -> Complex64 {
        let off = self.n_modes as i64;
        self.matrix[((m + off) as usize, (n + off) as usize)]
    }
}

/// Diagonal operator with entries `symbol(n)` on modes −N..N. Invertible on
/// the truncation exactly when the symbol has no zero there.
pub fn multiplier(symbol: impl Fn(i64) -> Complex64, n_modes: usize) -> CircleOperator {
    let dim = 2 * n_modes + 1;
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = symbol(i as i64 - n_modes as i64);
    }
    CircleOperator {
        n_modes,
        matrix: m,
        kind: OperatorKind::Multiplier,
    }
}

/// The Calderón projector: the 0/1 multiplier keeping modes n ≥ 0. Satisfies
/// C = C² = C* exactly.
#[derive(Debug, Clone)]
pub struct CalderonProjector {
    op: CircleOperator,
}

impl CalderonProjector {
    pub fn new(n_modes: usize) -> Self {
        let op = multiplier(
            |n| {
                if n >= 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
            n_modes,
        );
        CalderonProjector { op }
    }

    pub fn operator(&self) -> &CircleOperator {
        &self.op
    }

    /// Modes retained by the projector, in increasing order.
    pub fn retained_modes(&self) -> Vec<i64> {
        (0..=self.op.n_modes as i64).collect()
    }
}

/// Uniform sample grid θ_j = 2πj/(2N+1), j = 0..2N.
pub fn sample_grid(n_modes: usize) -> Vec<f64> {
    let dim = 2 * n_modes + 1;
    (0..dim)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / dim as f64)
        .collect()
}

/// Fourier coefficients f̂(−N..N) from samples on the 2N+1 point grid.
pub fn fourier_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let dim = samples.len();
    assert!(dim % 2 == 1, "grid size must be odd (2N+1)");
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(dim).process(&mut buf);
    let n = dim / 2;
    let scale = 1.0 / dim as f64;
    // DFT bin k holds mode k for k ≤ N and mode k−(2N+1) for k > N.
    (0..dim)
        .map(|i| {
            let mode = i as i64 - n as i64;
            let bin = if mode >= 0 {
                mode as usize
            } else {
                (mode + dim as i64) as usize
            };
            buf[bin] * scale
        })
        .collect()
}

/// Multiplication operator by the function with the given coefficients: the
/// Toeplitz matrix M_{mn} = f̂(m−n), band-limited to |m−n| ≤ N.
pub fn multiplication_from_coefficients(coeffs: &[Complex64], n_modes: usize) -> CircleOperator {
    let dim = 2 * n_modes + 1;
    assert_eq!(coeffs.len(), dim);
    let matrix = CMatrix::from_fn(dim, dim, |r, c| {
        let lag = r as i64 - c as i64;
        if lag.unsigned_abs() as usize <= n_modes {
            coeffs[(lag + n_modes as i64) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    CircleOperator {
        n_modes,
        matrix,
        kind: OperatorKind::Multiplication,
    }
}

pub fn multiplication_operator(
    f: impl Fn(f64) -> Complex64,
    n_modes: usize,
) -> (CircleOperator, Vec<Complex64>) {
    let samples: Vec<Complex64> = sample_grid(n_modes).into_iter().map(f).collect();
    let coeffs = fourier_coefficients(&samples);
    (multiplication_from_coefficients(&coeffs, n_modes), coeffs)
}

/// Compression P₁ M_f P₀ written on the retained modes of two diagonal 0/1
/// multiplier idempotents. Carries the symbol band so index computations can
/// rebuild full-constraint sections.
#[derive(Debug, Clone)]
pub struct CompressedOperator {
    pub matrix: CMatrix,
    pub in_modes: Vec<i64>,
    pub out_modes: Vec<i64>,
    pub coeffs: Vec<Complex64>,
    pub n_modes: usize,
    pub aliasing_warning: bool,
}

fn diagonal_retained_modes(p: &CircleOperator) -> Result<Vec<i64>> {
    let n = p.n_modes as i64;
    let mut modes = Vec::new();
    for m in -n..=n {
        for k in -n..=n {
            if m != k && p.entry(m, k).norm() > 0.0 {
                return Err(Error::Shape {
                    position: 0,
                    detail: "projection must be a diagonal multiplier".into(),
                });
            }
        }
        let d = p.entry(m, m);
        if (d - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
            modes.push(m);
        } else if d.norm() > 1e-14 {
            return Err(Error::Shape {
                position: 0,
                detail: "projection entries must be 0 or 1".into(),
            });
        }
    }
    Ok(modes)
}

pub fn toeplitz_compress(
    f: impl Fn(f64) -> Complex64,
    p0: &CircleOperator,
    p1: &CircleOperator,
    n_modes: usize,
) -> Result<CompressedOperator> {
    let samples: Vec<Complex64> = sample_grid(n_modes).into_iter().map(f).collect();
    let coeffs = fourier_coefficients(&samples);
    let coeff_scale: f64 = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let edge = coeffs[0].norm().max(coeffs[2 * n_modes].norm());
    let aliasing_warning = coeff_scale > 0.0 && edge > 1e-8 * coeff_scale;

    let in_modes = diagonal_retained_modes(p0)?;
    let out_modes = diagonal_retained_modes(p1)?;
    let off = n_modes as i64;
    let matrix = CMatrix::from_fn(out_modes.len(), in_modes.len(), |r, c| {
        let lag = out_modes[r] - in_modes[c];
        if lag.unsigned_abs() as usize <= n_modes {
            coeffs[(lag + off) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(CompressedOperator {
        matrix,
        in_modes,
        out_modes,
        coeffs,
        n_modes,
        aliasing_warning,
    })
}

/// Coefficient band of a symbol: smallest p, q ≥ 0 with f̂ supported in
/// [−p, q] up to 1e−13 of the largest coefficient.
fn band_extent(coeffs: &[Complex64], n_modes: usize) -> (usize, usize) {
    let scale: f64 = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = 1e-13 * scale;
    let mut p = 0;
    let mut q = 0;
    for k in 1..=n_modes {
        if coeffs[n_modes + k].norm() > cut {
            q = k;
        }
        if coeffs[n_modes - k].norm() > cut {
            p = k;
        }
    }
    (p, q)
}

/// Kernel dimension of the Hardy-space operator u ↦ C(f·u) seen through the
/// full-constraint section: columns are Hardy modes 0..N, rows all output
/// modes 0..N+q the band can reach. Decaying kernel vectors of the
/// semi-infinite operator pass with exponentially small residual; artifacts
/// living at the truncation edge are killed exactly by the extra rows.
fn hardy_kernel_dim(coeffs: &[Complex64], n_modes: usize, tol: &TolPolicy) -> usize {
    let (_, q) = band_extent(coeffs, n_modes);
    let rows = n_modes + q + 1;
    let cols = n_modes + 1;
    let off = n_modes as i64;
    let m = CMatrix::from_fn(rows, cols, |r, c| {
        let lag = r as i64 - c as i64;
        if lag.unsigned_abs() as usize <= n_modes {
            coeffs[(lag + off) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    cols - rank_tol(&m, tol).rank
}

fn conjugate_coefficients(coeffs: &[Complex64]) -> Vec<Complex64> {
    // Coefficients of f̄: (f̄)^(k) = conj(f̂(−k)).
    coeffs.iter().rev().map(|c| c.conj()).collect()
}

/// Fredholm index of the Hardy-space compression, from kernel and cokernel
/// dimensions of the full-constraint sections at two truncations. The
/// dimensions must agree between the truncations; disagreement signals a
/// non-elliptic symbol.
pub fn fredholm_index(
    t1: &CompressedOperator,
    t2: &CompressedOperator,
    tol: &TolPolicy,
) -> Result<i64> {
    let (n1, n2) = (t1.n_modes, t2.n_modes);
    if n1 >= n2 {
        return Err(Error::Config("truncations must satisfy N1 < N2".into()));
    }
    let dims = |t: &CompressedOperator| {
        let ker = hardy_kernel_dim(&t.coeffs, t.n_modes, tol);
        let coker = hardy_kernel_dim(&conjugate_coefficients(&t.coeffs), t.n_modes, tol);
        (ker, coker)
    };
    let (k1, c1) = dims(t1);
    let (k2, c2) = dims(t2);
    if (k1, c1) != (k2, c2) {
        return Err(Error::UnstableIndex {
            n1,
            n2,
            detail: format!("ker/coker ({k1},{c1}) at N={n1} vs ({k2},{c2}) at N={n2}"),
        });
    }
    Ok(k1 as i64 - c1 as i64)
}

/// Total argument increment of the sampled symbol divided by 2π. Errors when
/// the symbol comes close to zero or the increment is far from an integer.
pub fn winding_number(samples: &[Complex64]) -> Result<i64> {
    let max_abs = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_abs = samples.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if min_abs < 1e-8 * max_abs || max_abs == 0.0 {
        return Err(Error::SymbolVanishes { min_abs, max_abs });
    }
    let mut total = 0.0;
    for i in 0..samples.len() {
        let a = samples[i];
        let b = samples[(i + 1) % samples.len()];
        total += (b / a).arg();
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.1 {
        return Err(Error::UnstableIndex {
            n1: samples.len(),
            n2: samples.len(),
            detail: format!("winding {w:.4} is not close to an integer"),
        });
    }
    Ok(rounded as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllipticityVerdict {
    Elliptic,
    NonElliptic,
}

/// Outcome of reducing the disc problem to its boundary: the index of the
/// Hardy compression of φ against the winding prediction.
#[derive(Debug, Clone, Serialize)]
pub struct CrReductionReport {
    pub index: Option<i64>,
    pub winding: Option<i64>,
    pub verdict: EllipticityVerdict,
    pub agree: bool,
    pub detail: String,
}

/// Compares the Fredholm index of C·M_φ·C on Hardy modes with −winding(φ);
/// a vanishing symbol or truncation-unstable dimensions yield a non-elliptic
/// verdict.
pub fn cr_problem_reduction(
    phi: impl Fn(f64) -> Complex64 + Copy,
    n_modes: usize,
    tol: &TolPolicy,
) -> CrReductionReport {
    let c1 = CalderonProjector::new(n_modes);
    let c2 = CalderonProjector::new(2 * n_modes);
    let t1 = toeplitz_compress(phi, c1.operator(), c1.operator(), n_modes);
    let t2 = toeplitz_compress(phi, c2.operator(), c2.operator(), 2 * n_modes);

    let samples: Vec<Complex64> = sample_grid(2 * n_modes).into_iter().map(phi).collect();
    let winding = winding_number(&samples).ok();

    let index = match (t1, t2) {
        (Ok(t1), Ok(t2)) => fredholm_index(&t1, &t2, tol),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };

    match (index, winding) {
        (Ok(index), Some(w)) => CrReductionReport {
            index: Some(index),
            winding: Some(w),
            verdict: EllipticityVerdict::Elliptic,
            agree: index == -w,
            detail: String::new(),
        },
        (index, winding) => {
            let detail = match &index {
                Err(e) => e.to_string(),
                Ok(_) => "symbol winding undefined".to_string(),
            };
            CrReductionReport {
                index: index.ok(),
                winding,
                verdict: EllipticityVerdict::NonElliptic,
                agree: false,
                detail,
            }
        }
    }
}

/// Least-squares fit of log(max entry at mode distance k) against log k,
/// where the distance of entry (m, n) from the zero mode is max(|m|, |n|).
/// Operators whose fitted decay exponent is at least 4 with a small fit
/// residual are flagged smoothing-grade.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub residual: f64,
    pub is_smoothing: bool,
}

pub fn decay_fit(op: &CircleOperator) -> DecayFit {
    let n = op.n_modes as i64;
    let mut rings: Vec<f64> = Vec::new();
    for k in 1..=n {
        let mut max_entry: f64 = 0.0;
        for m in -n..=n {
            for c in -n..=n {
                if m.abs().max(c.abs()) == k {
                    max_entry = max_entry.max(op.entry(m, c).norm());
                }
            }
        }
        rings.push(max_entry);
    }
    // Rings that have fallen to the roundoff floor carry no decay
    // information; fitting them would flatten the slope.
    let global_max = rings.iter().copied().fold(op.entry(0, 0).norm(), f64::max);
    let floor = 1e-14 * global_max;
    let pts: Vec<(f64, f64)> = rings
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > floor && e > 1e-300)
        .map(|(i, &e)| (((i + 1) as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return DecayFit {
            exponent: f64::INFINITY,
            residual: 0.0,
            is_smoothing: true,
        };
    }
    let n_pts = pts.len() as f64;
    let mean_x: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n_pts;
    let mean_y: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n_pts;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - mean_y - slope * (p.0 - mean_x)).powi(2))
        .sum::<f64>()
        / n_pts)
        .sqrt();
    // Relative misfit: rms deviation over the total log-drop, so
    // faster-than-power decay (convex in log-log) still registers as a
    // clean fit rather than being rejected for curvature.
    let y_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let drop = (y_max - y_min).max(1e-12);
    let residual = rms / drop;
    let exponent = -slope;
    DecayFit {
        exponent,
        residual,
        is_smoothing: exponent >= 4.0 && residual < 0.5,
    }
}

/// The compression defect C M_f C M_g C − C M_{fg} C, evaluated at twice the
/// requested truncation and restricted to the window |m|, |n| ≤ N so that
/// the truncation's own edge effects stay outside the reported entries. For
/// smooth symbols the windowed defect decays at smoothing grade.
pub fn composition_defect(
    f: impl Fn(f64) -> Complex64,
    g: impl Fn(f64) -> Complex64 + Copy,
    n_modes: usize,
) -> CircleOperator {
    let big = 2 * n_modes;
    let (mf, _) = multiplication_operator(&f, big);
    let (mg, _) = multiplication_operator(g, big);
    let (mfg, _) = multiplication_operator(|t| f(t) * g(t), big);
    let c = CalderonProjector::new(big);
    let cm = c.operator().matrix();
    let defect = cm * mf.matrix() * cm * mg.matrix() * cm - cm * mfg.matrix() * cm;
    let dim = 2 * n_modes + 1;
    let offset = big - n_modes;
    let window = CMatrix::from_fn(dim, dim, |r, c| defect[(r + offset, c + offset)]);
    CircleOperator {
        n_modes,
        matrix: window,
        kind: OperatorKind::General,
    }
}

pub fn general_operator(n_modes: usize, matrix: CMatrix) -> Result<CircleOperator> {
    CircleOperator::new_general(n_modes, matrix)
}

pub fn op_norm_circle(op: &CircleOperator) -> f64 {
    op_norm(&op.matrix)
}
