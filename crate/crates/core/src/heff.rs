//! Numerical check of the effective Hamiltonian by second-order harmonic
//! averaging.
//!
//! The lab-frame Hamiltonian of the emitter coupled to one representative
//! field mode (Fock space truncated at `N` photons) is written as a sum of
//! operators times `e^{i n ω_L t}`. Moving to the frame rotating with
//! `ω_L(a†a + S_z)` shifts each matrix element by its excitation-number
//! difference. The oscillating remainder `H″` is then averaged to second order,
//! `H_pert = −i H″ ∫H″ dt`, with the antiderivative constant set to zero.
//!
//! Every term carries a `field_order`: the number of atom–mode coupling
//! factors it contains. Coefficients are compared order by order, which keeps
//! the `g²` vacuum shifts (dropped in the analytic result) out of the
//! Bloch–Siegert comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::OperatorMatrix;
use crate::model::EffectiveModel;

/// Harmonics kept by default after averaging.
pub const DEFAULT_KEEP_HARMONIC: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeffError {
    #[error("mode truncation N = {0} too small (need N ≥ 2)")]
    TruncationTooSmall(usize),
    #[error("input `{0}` must be finite")]
    NonFinite(&'static str),
    #[error("static term `{0}` passed to the averaging step (would produce a secular term)")]
    SecularTerm(String),
    #[error("laser frequency must be positive, got {0}")]
    BadLaserFrequency(f64),
}

/// `amplitude · op · e^{i·harmonic·ω_L t}`.
#[derive(Debug, Clone)]
pub struct HarmonicTerm {
    pub label: String,
    pub op: DMatrix<C64>,
    /// In s⁻¹ (energy/ħ).
    pub amplitude: C64,
    pub harmonic: i32,
    /// Power of the atom–mode coupling.
    pub field_order: u32,
}

impl HarmonicTerm {
    pub fn matrix(&self) -> DMatrix<C64> {
        &self.op * self.amplitude
    }

    /// Hermitian-conjugate partner `(op†, amplitude*, −harmonic)`.
    pub fn conjugate(&self) -> Self {
        Self {
            label: format!("({})†", self.label),
            op: self.op.adjoint(),
            amplitude: self.amplitude.conj(),
            harmonic: -self.harmonic,
            field_order: self.field_order,
        }
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.amplitude *= factor;
        self
    }
}

/// A time-periodic operator as a list of harmonic terms on the truncated
/// atom ⊗ mode space.
#[derive(Debug, Clone)]
pub struct HarmonicSum {
    pub terms: Vec<HarmonicTerm>,
    pub omega_l: f64,
    /// (atom, mode) dimensions: `(2, N + 1)`.
    pub dims: (usize, usize),
}

impl HarmonicSum {
    fn empty_like(&self) -> Self {
        Self {
            terms: Vec::new(),
            omega_l: self.omega_l,
            dims: self.dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn harmonics(&self) -> BTreeSet<i32> {
        self.terms.iter().map(|t| t.harmonic).collect()
    }

    /// Whether any term sits at `harmonic` with the given field order.
    pub fn has_terms(&self, harmonic: i32, field_order: Option<u32>) -> bool {
        self.terms
            .iter()
            .any(|t| t.harmonic == harmonic && field_order.is_none_or(|o| t.field_order == o))
    }

    /// Summed operator at one harmonic, optionally restricted to a field order.
    pub fn component(&self, harmonic: i32, field_order: Option<u32>) -> DMatrix<C64> {
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        for t in &self.terms {
            if t.harmonic == harmonic && field_order.is_none_or(|o| t.field_order == o) {
                acc += t.matrix();
            }
        }
        acc
    }

    fn scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// `H_{−n} = H_n†` for every harmonic, to `tol` relative to the largest
    /// term.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let bound = tol * self.scale().max(f64::MIN_POSITIVE);
        let orders: BTreeSet<u32> = self.terms.iter().map(|t| t.field_order).collect();
        self.harmonics().iter().all(|&n| {
            orders.iter().all(|&o| {
                let lhs = self.component(n, Some(o));
                let rhs = self.component(-n, Some(o)).adjoint();
                (lhs - rhs).iter().all(|z| z.norm() <= bound)
            })
        })
    }

    /// Every term has a partner `(op†, amplitude*, −harmonic)` in the list.
    pub fn has_conjugate_partners(&self, tol: f64) -> bool {
        let bound = tol * self.scale().max(f64::MIN_POSITIVE);
        self.terms.iter().all(|t| {
            let want = t.matrix().adjoint();
            self.terms.iter().any(|u| {
                u.harmonic == -t.harmonic
                    && u.field_order == t.field_order
                    && (u.matrix() - &want).iter().all(|z| z.norm() <= bound)
            })
        })
    }

    /// Split into the static (`n = 0`) and oscillating parts.
    pub fn split_static(&self) -> (HarmonicSum, HarmonicSum) {
        let (stat, osc): (Vec<_>, Vec<_>) =
            self.terms.iter().cloned().partition(|t| t.harmonic == 0);
        (
            Self {
                terms: stat,
                ..self.empty_like()
            },
            Self {
                terms: osc,
                ..self.empty_like()
            },
        )
    }

    /// `(H + H^†)/2` term by term: each term is halved and its conjugate
    /// partner added.
    pub fn hermitized(&self) -> Self {
        let mut out = self.empty_like();
        for t in &self.terms {
            out.terms.push(t.clone().scaled(0.5));
            out.terms.push(t.conjugate().scaled(0.5));
        }
        out.canonicalize();
        out
    }

    /// Concatenate two sums on the same space.
    pub fn merged_with(&self, other: &HarmonicSum) -> Self {
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.canonicalize();
        out
    }

    /// Merge terms with the same (harmonic, field order, label), drop exact
    /// zeros, and sort by that key. Summation follows the sorted order so the
    /// result does not depend on how the terms were produced.
    fn canonicalize(&mut self) {
        let mut groups: BTreeMap<(i32, u32, String), HarmonicTerm> = BTreeMap::new();
        let mut terms = std::mem::take(&mut self.terms);
        terms.sort_by(|a, b| {
            (a.harmonic, a.field_order, &a.label).cmp(&(b.harmonic, b.field_order, &b.label))
        });
        for t in terms {
            let key = (t.harmonic, t.field_order, t.label.clone());
            match groups.get_mut(&key) {
                Some(existing) => {
                    debug_assert_eq!(existing.op, t.op, "label `{}` names two operators", t.label);
                    existing.amplitude += t.amplitude;
                }
                None => {
                    groups.insert(key, t);
                }
            }
        }
        self.terms = groups
            .into_values()
            .filter(|t| t.amplitude != C64::new(0.0, 0.0) && t.op.iter().any(|z| z.norm() != 0.0))
            .collect();
    }
}

impl fmt::Display for HarmonicSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(
                f,
                "  n={:+} order={} {:>24}  {:+.6e}{:+.6e}i",
                t.harmonic, t.field_order, t.label, t.amplitude.re, t.amplitude.im
            )?;
        }
        Ok(())
    }
}

fn atom_matrix(op: OperatorMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| op.entry(r, c))
}

/// Truncated annihilation operator on `N + 1` Fock states.
fn annihilation(n_max: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n_max + 1, n_max + 1, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

struct Factors {
    n_max: usize,
}

impl Factors {
    fn mode(&self, name: &str) -> DMatrix<C64> {
        let a = annihilation(self.n_max);
        match name {
            "1" => DMatrix::identity(self.n_max + 1, self.n_max + 1),
            "a" => a,
            "a†" => a.adjoint(),
            "a†a" => a.adjoint() * a,
            _ => unreachable!("unknown mode factor {name}"),
        }
    }

    fn atom(&self, name: &str) -> DMatrix<C64> {
        atom_matrix(match name {
            "1" => OperatorMatrix::identity(),
            "S+" => OperatorMatrix::sigma_plus(),
            "S-" => OperatorMatrix::sigma_minus(),
            "Sz" => OperatorMatrix::sigma_z(),
            _ => unreachable!("unknown atom factor {name}"),
        })
    }

    /// `atom ⊗ mode`, labelled `mode·atom` with identities omitted.
    fn term(
        &self,
        atom: &str,
        mode: &str,
        amplitude: C64,
        harmonic: i32,
        order: u32,
    ) -> HarmonicTerm {
        let label = match (atom, mode) {
            (a, "1") => a.to_owned(),
            ("1", m) => m.to_owned(),
            (a, m) => format!("{m}{a}"),
        };
        HarmonicTerm {
            label,
            op: self.atom(atom).kronecker(&self.mode(mode)),
            amplitude,
            harmonic,
            field_order: order,
        }
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Single-mode lab-frame Hamiltonian
/// `ω_k a†a + ω₀S_z + Ω(S⁺+S⁻)cos ω_Lt + G S_z cos ω_Lt + i g (a†−a)(S⁺+S⁻)`
/// with each cosine split into harmonics ±1. Zero-amplitude terms are omitted.
pub fn build_lab_hamiltonian(
    model: &EffectiveModel,
    n_max: usize,
    mode_freq: f64,
    coupling: f64,
) -> Result<HarmonicSum, HeffError> {
    if n_max < 2 {
        return Err(HeffError::TruncationTooSmall(n_max));
    }
    for (name, v) in [
        ("omega0", model.omega0),
        ("omegaL", model.omega_l),
        ("rabi", model.omega_rabi),
        ("G", model.g_asym),
        ("mode_freq", mode_freq),
        ("coupling", coupling),
    ] {
        if !v.is_finite() {
            return Err(HeffError::NonFinite(name));
        }
    }
    if model.omega_l <= 0.0 {
        return Err(HeffError::BadLaserFrequency(model.omega_l));
    }

    let f = Factors { n_max };
    let mut terms = Vec::new();
    if mode_freq != 0.0 {
        terms.push(f.term("1", "a†a", re(mode_freq), 0, 0));
    }
    if model.omega0 != 0.0 {
        terms.push(f.term("Sz", "1", re(model.omega0), 0, 0));
    }
    if model.omega_rabi != 0.0 {
        let half = re(0.5 * model.omega_rabi);
        for n in [1, -1] {
            terms.push(f.term("S+", "1", half, n, 0));
            terms.push(f.term("S-", "1", half, n, 0));
        }
    }
    if model.g_asym != 0.0 {
        for n in [1, -1] {
            terms.push(f.term("Sz", "1", re(0.5 * model.g_asym), n, 0));
        }
    }
    if coupling != 0.0 {
        let ig = C64::new(0.0, coupling);
        terms.push(f.term("S+", "a†", ig, 0, 1));
        terms.push(f.term("S-", "a†", ig, 0, 1));
        terms.push(f.term("S+", "a", -ig, 0, 1));
        terms.push(f.term("S-", "a", -ig, 0, 1));
    }
    let mut h = HarmonicSum {
        terms,
        omega_l: model.omega_l,
        dims: (2, n_max + 1),
    };
    h.canonicalize();
    Ok(h)
}

/// Excitation number `a†a + S_z + 1/2` of basis index `k`.
fn excitation(k: usize, mode_dim: usize) -> i32 {
    (k / mode_dim + k % mode_dim) as i32
}

/// `e^{iH₀t}(H − H₀)e^{−iH₀t}` with `H₀ = ω_L(a†a + S_z)`.
///
/// Matrix element `(k, l)` picks up `e^{i(e_k − e_l)ω_L t}`, so each operator
/// is split by excitation-number difference and moved to the shifted harmonic.
pub fn rotate_frame(h: &HarmonicSum) -> HarmonicSum {
    let mode_dim = h.dims.1;
    let f = Factors {
        n_max: mode_dim - 1,
    };
    let mut input = h.terms.clone();
    input.push(f.term("1", "a†a", re(-h.omega_l), 0, 0));
    input.push(f.term("Sz", "1", re(-h.omega_l), 0, 0));

    let dim = h.dim();
    let mut out = h.empty_like();
    for t in input {
        let mut pieces: BTreeMap<i32, DMatrix<C64>> = BTreeMap::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = t.op[(r, c)];
                if v.norm() != 0.0 {
                    let d = excitation(r, mode_dim) - excitation(c, mode_dim);
                    pieces.entry(d).or_insert_with(|| DMatrix::zeros(dim, dim))[(r, c)] = v;
                }
            }
        }
        let single = pieces.len() == 1;
        for (d, op) in pieces {
            out.terms.push(HarmonicTerm {
                label: if single {
                    t.label.clone()
                } else {
                    format!("{}[{d:+}]", t.label)
                },
                op,
                amplitude: t.amplitude,
                harmonic: t.harmonic + d,
                field_order: t.field_order,
            });
        }
    }
    out.canonicalize();
    out
}

/// Outcome of the averaging step. Both parts are Hermitized.
#[derive(Debug, Clone)]
pub struct SecondOrder {
    /// Terms with `|harmonic| ≤ keep_max_harmonic`.
    pub kept: HarmonicSum,
    /// Faster terms dropped from the effective Hamiltonian.
    pub discarded: HarmonicSum,
}

/// Every product `A_a · ∫A_b dt` of `−i H″ ∫H″ dt`, i.e. amplitude
/// `−α_a α_b / (n_b ω_L)` at harmonic `n_a + n_b`, before any truncation or
/// Hermitization.
pub fn all_products(h_osc: &HarmonicSum) -> Result<HarmonicSum, HeffError> {
    if let Some(t) = h_osc.terms.iter().find(|t| t.harmonic == 0) {
        return Err(HeffError::SecularTerm(t.label.clone()));
    }
    let omega_l = h_osc.omega_l;
    let n = h_osc.terms.len();
    let terms: Vec<HarmonicTerm> = (0..n * n)
        .into_par_iter()
        .filter_map(|idx| {
            let a = &h_osc.terms[idx / n];
            let b = &h_osc.terms[idx % n];
            let op = &a.op * &b.op;
            if op.iter().all(|z| z.norm() == 0.0) {
                return None;
            }
            Some(HarmonicTerm {
                label: format!("{}·{}", a.label, b.label),
                op,
                amplitude: -(a.amplitude * b.amplitude) / (b.harmonic as f64 * omega_l),
                harmonic: a.harmonic + b.harmonic,
                field_order: a.field_order + b.field_order,
            })
        })
        .collect();
    let mut out = HarmonicSum {
        terms,
        ..h_osc.empty_like()
    };
    out.canonicalize();
    Ok(out)
}

pub fn second_order_average(
    h_osc: &HarmonicSum,
    keep_max_harmonic: u32,
) -> Result<SecondOrder, HeffError> {
    let products = all_products(h_osc)?;
    let (kept, discarded): (Vec<_>, Vec<_>) = products
        .terms
        .into_iter()
        .partition(|t| t.harmonic.unsigned_abs() <= keep_max_harmonic);
    let kept = HarmonicSum {
        terms: kept,
        ..h_osc.empty_like()
    }
    .hermitized();
    let discarded = HarmonicSum {
        terms: discarded,
        ..h_osc.empty_like()
    }
    .hermitized();
    Ok(SecondOrder { kept, discarded })
}

/// Every intermediate of the derivation.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub lab: HarmonicSum,
    pub rotated: HarmonicSum,
    pub static_part: HarmonicSum,
    pub oscillating: HarmonicSum,
    pub second_order: SecondOrder,
}

impl Derivation {
    /// Static rotating-frame part plus the kept second-order terms.
    pub fn effective_hamiltonian(&self) -> HarmonicSum {
        self.static_part.merged_with(&self.second_order.kept)
    }
}

pub fn derive(
    model: &EffectiveModel,
    n_max: usize,
    mode_freq: f64,
    coupling: f64,
    keep_max_harmonic: u32,
) -> Result<Derivation, HeffError> {
    let lab = build_lab_hamiltonian(model, n_max, mode_freq, coupling)?;
    let rotated = rotate_frame(&lab);
    let (static_part, oscillating) = rotated.split_static();
    let second_order = second_order_average(&oscillating, keep_max_harmonic)?;
    Ok(Derivation {
        lab,
        rotated,
        static_part,
        oscillating,
        second_order,
    })
}

/// One extracted coefficient and its deviation from the analytic value.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCheck {
    pub name: &'static str,
    pub pattern: &'static str,
    pub harmonic: i32,
    pub field_order: u32,
    pub derived: C64,
    pub target: C64,
    /// Relative deviation, or absolute when the target is zero.
    pub deviation: f64,
    /// Frobenius norm of the component left over after removing the pattern.
    pub off_pattern: f64,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeffReport {
    pub checks: Vec<CoefficientCheck>,
}

impl HeffReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.checks.iter().all(|c| c.deviation < tol)
    }

    pub fn get(&self, name: &str) -> Option<&CoefficientCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for HeffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(
                f,
                "{:<14} {:<12} n={:+} order={}  derived={:+.12e}{:+.12e}i  target={:+.12e}{:+.12e}i  deviation={:.3e}",
                c.name,
                c.pattern,
                c.harmonic,
                c.field_order,
                c.derived.re,
                c.derived.im,
                c.target.re,
                c.target.im,
                c.deviation
            )?;
            if let Some(d) = &c.diagnostic {
                write!(f, "  ({d})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `i·x`, with −0 folded into +0.
fn imag(x: f64) -> C64 {
    C64::new(0.0, x + 0.0)
}

/// Project the averaged Hamiltonian onto the three operator patterns of the
/// analytic result: `S_z` (static, light shift Ω²/(4ω_L)), `a†S⁺` at harmonic
/// +1 (pair term, `−i·3Gg/(8ω_L)`) and `(a − a†)S_z` (static, `−i·Ωg/(2ω_L)`).
pub fn compare_to_target(
    derived: &HarmonicSum,
    model: &EffectiveModel,
    coupling: f64,
) -> HeffReport {
    let f = Factors {
        n_max: derived.dims.1 - 1,
    };
    let omega_l = model.omega_l;
    let one = re(1.0);
    let sz_coupling = f.term("Sz", "a", one, 0, 1).op - f.term("Sz", "a†", one, 0, 1).op;
    let specs = [
        (
            "bloch-siegert",
            "Sz",
            0,
            0,
            f.term("Sz", "1", one, 0, 0).op,
            re(model.bs_shift),
        ),
        (
            "pair",
            "a†S+",
            1,
            1,
            f.term("S+", "a†", one, 1, 1).op,
            imag(-3.0 * model.g_asym * coupling / (8.0 * omega_l)),
        ),
        (
            "sz-coupling",
            "(a-a†)Sz",
            0,
            1,
            sz_coupling,
            imag(-model.omega_rabi * coupling / (2.0 * omega_l)),
        ),
    ];

    let checks = specs
        .into_iter()
        .map(|(name, pattern, harmonic, order, p, target)| {
            let zero = C64::new(0.0, 0.0);
            if !derived.has_terms(harmonic, Some(order)) {
                let (deviation, diagnostic) = if target == zero {
                    (0.0, None)
                } else {
                    (
                        f64::INFINITY,
                        Some(format!(
                            "no terms at harmonic {harmonic:+}, field order {order}"
                        )),
                    )
                };
                return CoefficientCheck {
                    name,
                    pattern,
                    harmonic,
                    field_order: order,
                    derived: zero,
                    target,
                    deviation,
                    off_pattern: 0.0,
                    diagnostic,
                };
            }
            let x = derived.component(harmonic, Some(order));
            let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let overlap: C64 = p.iter().zip(x.iter()).map(|(pi, xi)| pi.conj() * xi).sum();
            let coeff = overlap / norm;
            let off_pattern = (&x - &p * coeff)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            let deviation = if target == zero {
                coeff.norm()
            } else {
                (coeff - target).norm() / target.norm()
            };
            CoefficientCheck {
                name,
                pattern,
                harmonic,
                field_order: order,
                derived: coeff,
                target,
                deviation,
                off_pattern,
                diagnostic: None,
            }
        })
        .collect();
    HeffReport { checks }
}
