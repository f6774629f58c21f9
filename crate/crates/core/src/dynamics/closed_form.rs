//! Tabulated closed-form propagators `exp(−iHt)` for field and axis
//! orientations where the two-spin problem splits into 1×1 and 2×2 blocks.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use super::hamiltonian::{Abbreviations, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};
use crate::spin::Spin;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosedFormVariant {
    Hyperfine,
    MuLongitudinalZ,
    MuTransverseX,
    MuTransverseY,
    MuStarZZ,
    MuStarXZ,
    MuStarYZ,
    MuLikeSpinOneHyperfine,
}

const AXIS_TOL: f64 = 1e-12;

fn along(v: &Vector3<f64>, axis: usize) -> bool {
    let off: f64 = (0..3).filter(|&k| k != axis).map(|k| v[k].abs()).sum();
    off <= AXIS_TOL * v.norm()
}

impl ClosedFormVariant {
    pub const ALL: [Self; 8] = [
        Self::Hyperfine,
        Self::MuLongitudinalZ,
        Self::MuTransverseX,
        Self::MuTransverseY,
        Self::MuStarZZ,
        Self::MuStarXZ,
        Self::MuStarYZ,
        Self::MuLikeSpinOneHyperfine,
    ];

    /// Whether the Hamiltonian's field and axis orientation is the tabulated one.
    pub fn supports(&self, spec: &HamiltonianSpec) -> bool {
        if spec.validate().is_err() {
            return false;
        }
        let b = &spec.b_field;
        let no_field = b.norm() == 0.0;
        let isotropic = spec.delta_a == 0.0;
        let axis = |k: usize| spec.anisotropy_axis.as_ref().is_some_and(|n| along(&n.unit(), k));
        let qubits = spec.j_e == Spin::HALF;
        match self {
            Self::Hyperfine => qubits && no_field && isotropic,
            Self::MuLongitudinalZ => qubits && isotropic && along(b, 2),
            Self::MuTransverseX => qubits && isotropic && along(b, 0),
            Self::MuTransverseY => qubits && isotropic && along(b, 1),
            Self::MuStarZZ => qubits && axis(2) && along(b, 2),
            Self::MuStarXZ => qubits && axis(0) && along(b, 2),
            Self::MuStarYZ => qubits && axis(1) && along(b, 2),
            Self::MuLikeSpinOneHyperfine => spec.j_e == Spin::ONE && no_field && isotropic,
        }
    }

    /// First tabulated variant matching the Hamiltonian, most specific first.
    pub fn detect(spec: &HamiltonianSpec) -> Option<Self> {
        const ORDER: [ClosedFormVariant; 8] = [
            ClosedFormVariant::Hyperfine,
            ClosedFormVariant::MuLikeSpinOneHyperfine,
            ClosedFormVariant::MuLongitudinalZ,
            ClosedFormVariant::MuTransverseX,
            ClosedFormVariant::MuTransverseY,
            ClosedFormVariant::MuStarZZ,
            ClosedFormVariant::MuStarXZ,
            ClosedFormVariant::MuStarYZ,
        ];
        ORDER.into_iter().find(|v| v.supports(spec))
    }

    fn field_component(&self, spec: &HamiltonianSpec) -> f64 {
        match self {
            Self::MuTransverseX => spec.b_field.x,
            Self::MuTransverseY => spec.b_field.y,
            _ => spec.b_field.z,
        }
    }
}

fn cis(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

/// `sin(ωt)/ω`, continuous at ω = 0.
fn sinc(w: f64, t: f64) -> f64 {
    if w.abs() < 1e-300 {
        t
    } else {
        (w * t).sin() / w
    }
}

fn symmetric(entries: &[((usize, usize), C64)], n: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(n, n);
    for &((i, j), v) in entries {
        u[(i, j)] = v;
        u[(j, i)] = v;
    }
    u
}

fn hyperfine(w0: f64, t: f64) -> ComplexMatrix {
    let p = cis(-w0 * t / 4.0) * 0.5;
    let e = cis(w0 * t);
    let one = c(1.0, 0.0);
    symmetric(
        &[
            ((0, 0), p * 2.0),
            ((1, 1), p * (one + e)),
            ((1, 2), p * (one - e)),
            ((2, 2), p * (one + e)),
            ((3, 3), p * 2.0),
        ],
        4,
    )
}

/// Diagonal corners with the shared central block; `shift` is `a` or `a + d`.
fn longitudinal(ab: &Abbreviations, shift: f64, t: f64) -> ComplexMatrix {
    let i = C64::i();
    let ph = cis(shift * t);
    let (cs, s) = ((ab.c * t).cos(), sinc(ab.c, t));
    symmetric(
        &[
            ((0, 0), ph * cis(-(2.0 * shift - ab.b_minus) * t)),
            ((1, 1), ph * (cs + i * ab.b_plus * s)),
            ((1, 2), ph * (-i * 2.0 * ab.a * s)),
            ((2, 2), ph * (cs - i * ab.b_plus * s)),
            ((3, 3), ph * cis(-(2.0 * shift + ab.b_minus) * t)),
        ],
        4,
    )
}

fn transverse_x(ab: &Abbreviations, t: f64) -> ComplexMatrix {
    let i = C64::i();
    let em = cis(-ab.a * t);
    let ep = cis(ab.a * t);
    let (cb, sb) = ((ab.b_minus * t).cos(), (ab.b_minus * t).sin());
    let (cs, s) = ((ab.c * t).cos(), sinc(ab.c, t));
    let lo = ep * (cs - i * 2.0 * ab.a * s);
    let hi = ep * (cs + i * 2.0 * ab.a * s);
    let half = 0.5;
    let u11 = (em * cb + lo) * half;
    let u22 = (em * cb + hi) * half;
    let u12 = -i * half * (-em * sb + ep * ab.b_plus * s);
    let u13 = -i * half * (-em * sb - ep * ab.b_plus * s);
    let u14 = (em * cb - lo) * half;
    let u23 = (em * cb - hi) * half;
    symmetric(
        &[
            ((0, 0), u11),
            ((3, 3), u11),
            ((1, 1), u22),
            ((2, 2), u22),
            ((0, 1), u12),
            ((2, 3), u12),
            ((0, 2), u13),
            ((1, 3), u13),
            ((0, 3), u14),
            ((1, 2), u23),
        ],
        4,
    )
}

fn transverse_y(ab: &Abbreviations, t: f64) -> ComplexMatrix {
    let x = transverse_x(ab, t);
    let (o, i) = (c(1.0, 0.0), C64::i());
    let pattern = [[o, -i, -i, -o], [i, o, o, -i], [i, o, o, -i], [-o, i, i, o]];
    ComplexMatrix::from_fn(4, 4, |r, k| pattern[r][k] * x[(r, k)])
}

fn star_xz(ab: &Abbreviations, t: f64, flip: bool) -> ComplexMatrix {
    let i = C64::i();
    let em = cis(-ab.a * t);
    let ep = cis(ab.a * t);
    let (cf, sf) = ((ab.f * t).cos(), sinc(ab.f, t));
    let (ch, sh) = ((ab.h * t).cos(), sinc(ab.h, t));
    let u14 = -i * em * ab.d * sf * if flip { -1.0 } else { 1.0 };
    symmetric(
        &[
            ((0, 0), em * (cf + i * ab.b_minus * sf)),
            ((3, 3), em * (cf - i * ab.b_minus * sf)),
            ((0, 3), u14),
            ((1, 1), ep * (ch + i * ab.b_plus * sh)),
            ((1, 2), -i * ep * (2.0 * ab.a + ab.d) * sh),
            ((2, 2), ep * (ch - i * ab.b_plus * sh)),
        ],
        4,
    )
}

fn spin_one_hyperfine(big_a: f64, t: f64) -> ComplexMatrix {
    let i = C64::i();
    let x = 0.75 * big_a * t;
    let v1 = cis(-big_a * t / 2.0);
    let v2 = -i * cis(big_a * t / 4.0) * (2.0 * 2f64.sqrt() / 3.0 * x.sin());
    let vp = cis(big_a * t / 4.0) * (x.cos() + i * (x.sin() / 3.0));
    let vm = cis(big_a * t / 4.0) * (x.cos() - i * (x.sin() / 3.0));
    symmetric(
        &[
            ((0, 0), v1),
            ((5, 5), v1),
            ((1, 1), vm),
            ((4, 4), vm),
            ((2, 2), vp),
            ((3, 3), vp),
            ((1, 3), v2),
            ((2, 4), v2),
        ],
        6,
    )
}

/// Closed-form `exp(−iHt)` (t in ns), carrying the tabulated global phases.
pub fn propagator_closed_form(
    variant: ClosedFormVariant,
    spec: &HamiltonianSpec,
    constants: &PhysicalConstants,
    t: f64,
) -> Result<ComplexMatrix> {
    if !variant.supports(spec) {
        return Err(Error::NotTabulated(format!("{variant:?} does not match the field/axis orientation")));
    }
    let mut ab = Abbreviations::new(spec, constants);
    // Signed field component along the tabulated axis.
    let b = variant.field_component(spec);
    let (gm, ge) = (constants.gamma_mu(), constants.gamma_e());
    ab.b_plus = b * (gm + ge) / 2.0;
    ab.b_minus = b * (gm - ge) / 2.0;
    Ok(match variant {
        ClosedFormVariant::Hyperfine => hyperfine(spec.contact(), t),
        ClosedFormVariant::MuLongitudinalZ => longitudinal(&ab, ab.a, t),
        ClosedFormVariant::MuTransverseX => transverse_x(&ab, t),
        ClosedFormVariant::MuTransverseY => transverse_y(&ab, t),
        ClosedFormVariant::MuStarZZ => longitudinal(&ab, ab.a + ab.d, t),
        ClosedFormVariant::MuStarXZ => star_xz(&ab, t, false),
        ClosedFormVariant::MuStarYZ => star_xz(&ab, t, true),
        ClosedFormVariant::MuLikeSpinOneHyperfine => spin_one_hyperfine(spec.contact(), t),
    })
}
