//! Step calculus on pairs (rational surface, real curve): end-state
//! constructors, inverse steps (blow-ups at real points or conjugate pairs),
//! and forward contractions, with the intersection lattice and the
//! topological pair kept synchronized at every state.

use crate::pairalg::{ClosedSurface, PairError, Side, TopPair, RP2};
use crate::piclattice::{
    minus_two_solutions, q, BaseSurface, Center, LatticeError, MinusTwoReport, PicLattice, Q,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmpError {
    #[error("self-intersection {csq} has the wrong parity for a {form} section")]
    ParityError { csq: i64, form: SectionForm },
    #[error("curve with self-intersection {csq} is not contractible")]
    NotContractible { csq: i64 },
    #[error("contraction at self-intersection {csq} is out of tracked scope")]
    MinusThreeOutOfScope { csq: i64 },
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("{0}")]
    Domain(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionForm {
    Torus,
    Klein,
}

impl fmt::Display for SectionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionForm::Torus => write!(f, "t2"),
            SectionForm::Klein => write!(f, "kl"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberForm {
    T2,
    K,
    S2,
}

impl fmt::Display for FiberForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberForm::T2 => write!(f, "t2"),
            FiberForm::K => write!(f, "k"),
            FiberForm::S2 => write!(f, "s2"),
        }
    }
}

/// Terminal configurations of the calculus: states from which no tracked
/// contraction except possibly of the curve itself remains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "end_state", rename_all = "snake_case")]
pub enum EndStateKind {
    /// Section of a P¹-bundle; even csq lives on the torus form, odd on the
    /// Klein form.
    P1BundleSection { csq: i64, form: SectionForm },
    /// Conic in the plane: separates ℝP² into a disc and a Möbius band.
    P2Conic,
    /// Plane section of the sphere quadric.
    QuadricSection,
    /// Line in the plane.
    P2Line,
    /// Smooth fiber of a conic bundle over the indicated real form.
    ConicBundleFiber { fiber: FiberForm },
    /// One-sided exceptional configuration (ℝP²,ℓ)#rest with csq −1.
    MinusOne { rest: ClosedSurface },
    /// The (𝕂,f)#𝕋² configuration with csq −2.
    MinusTwoKfT2,
}

impl fmt::Display for EndStateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndStateKind::P1BundleSection { csq, form } => write!(f, "section-{form}:{csq}"),
            EndStateKind::P2Conic => write!(f, "p2-conic"),
            EndStateKind::QuadricSection => write!(f, "quadric-section"),
            EndStateKind::P2Line => write!(f, "p2-line"),
            EndStateKind::ConicBundleFiber { fiber } => write!(f, "conic-bundle-{fiber}"),
            EndStateKind::MinusOne { rest } => match rest {
                ClosedSurface::Orientable { .. } => write!(f, "minus-one:t2"),
                ClosedSurface::NonOrientable { crosscaps: 1 } => write!(f, "minus-one:rp2"),
                ClosedSurface::NonOrientable { crosscaps } => {
                    write!(f, "minus-one:{crosscaps}rp2")
                }
            },
            EndStateKind::MinusTwoKfT2 => write!(f, "minus-two-kf-t2"),
        }
    }
}

impl FromStr for EndStateKind {
    type Err = MmpError;

    fn from_str(s: &str) -> Result<Self, MmpError> {
        let bad = || MmpError::Domain(format!("unknown end state `{s}`"));
        match s {
            "p2-conic" => return Ok(EndStateKind::P2Conic),
            "quadric-section" => return Ok(EndStateKind::QuadricSection),
            "p2-line" => return Ok(EndStateKind::P2Line),
            "conic-bundle-t2" => return Ok(EndStateKind::ConicBundleFiber { fiber: FiberForm::T2 }),
            "conic-bundle-k" => return Ok(EndStateKind::ConicBundleFiber { fiber: FiberForm::K }),
            "conic-bundle-s2" => return Ok(EndStateKind::ConicBundleFiber { fiber: FiberForm::S2 }),
            "minus-two-kf-t2" => return Ok(EndStateKind::MinusTwoKfT2),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("section-t2:") {
            let csq: i64 = arg.parse().map_err(|_| bad())?;
            return Ok(EndStateKind::P1BundleSection { csq, form: SectionForm::Torus });
        }
        if let Some(arg) = s.strip_prefix("section-kl:") {
            let csq: i64 = arg.parse().map_err(|_| bad())?;
            return Ok(EndStateKind::P1BundleSection { csq, form: SectionForm::Klein });
        }
        if let Some(arg) = s.strip_prefix("minus-one:") {
            if arg == "t2" {
                return Ok(EndStateKind::MinusOne { rest: ClosedSurface::orientable(1) });
            }
            let body = arg.strip_suffix("rp2").ok_or_else(bad)?;
            let crosscaps: u32 = if body.is_empty() { 1 } else { body.parse().map_err(|_| bad())? };
            if crosscaps == 0 {
                return Err(bad());
            }
            return Ok(EndStateKind::MinusOne { rest: ClosedSurface::non_orientable(crosscaps) });
        }
        Err(bad())
    }
}

/// One move of the calculus. The first four are inverse steps (blow-ups);
/// ContractC is forward-only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum StepKind {
    ConjPairOffCurve,
    ConjPairOnCurve,
    RealOffCurve { side: Side },
    RealOnCurve,
    ContractC,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::ConjPairOffCurve => write!(f, "conj-off"),
            StepKind::ConjPairOnCurve => write!(f, "conj-on"),
            StepKind::RealOffCurve { side: Side::Left } => write!(f, "real-off:left"),
            StepKind::RealOffCurve { side: Side::Right } => write!(f, "real-off:right"),
            StepKind::RealOffCurve { side: Side::Any } => write!(f, "real-off"),
            StepKind::RealOnCurve => write!(f, "real-on"),
            StepKind::ContractC => write!(f, "contract-c"),
        }
    }
}

impl FromStr for StepKind {
    type Err = MmpError;

    fn from_str(s: &str) -> Result<Self, MmpError> {
        match s {
            "conj-off" => Ok(StepKind::ConjPairOffCurve),
            "conj-on" => Ok(StepKind::ConjPairOnCurve),
            "real-off" => Ok(StepKind::RealOffCurve { side: Side::Any }),
            "real-off:left" => Ok(StepKind::RealOffCurve { side: Side::Left }),
            "real-off:right" => Ok(StepKind::RealOffCurve { side: Side::Right }),
            "real-on" => Ok(StepKind::RealOnCurve),
            "contract-c" => Ok(StepKind::ContractC),
            _ => Err(MmpError::Domain(format!("unknown step `{s}`"))),
        }
    }
}

type Sides = (ClosedSurface, ClosedSurface);

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub kind: StepKind,
    pub pair_before: TopPair,
    pub sides_before: Option<Sides>,
    pub csq_before: i64,
}

#[derive(Clone, Debug, PartialEq)]
struct EndSnapshot {
    kind: EndStateKind,
    lattice: PicLattice,
    pair: TopPair,
    csq: i64,
    sides: Option<Sides>,
}

/// A state of the calculus: the lattice (with its tracked curve class), the
/// topological pair, the curve self-intersection, left/right bookkeeping for
/// separating pairs, and the inverse steps applied since the end state.
#[derive(Clone, Debug, PartialEq)]
pub struct MmpState {
    pub lattice: PicLattice,
    pub pair: TopPair,
    pub csq: i64,
    /// (left, right) caps of a separating pair; None otherwise.
    pub sides: Option<Sides>,
    pub history: Vec<StepRecord>,
    end: EndSnapshot,
}

/// Target of a forward contraction: a tracked center by index, or the curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardTarget {
    Center(usize),
    Curve,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinusTwoCase {
    pub model: String,
    pub rational: bool,
}

/// Case analysis for contracting a (−2)-curve: the degenerate conic-bundle
/// model stays rational, the two del Pezzo alternatives do not, and the
/// integral solutions of the square-(−2) equation pin the lattice data.
#[derive(Clone, Debug, Serialize)]
pub struct MinusTwoCaseReport {
    pub cases: Vec<MinusTwoCase>,
    pub lattice_solutions: MinusTwoReport,
}

#[derive(Clone, Debug)]
pub enum ForwardOutcome {
    State(Box<MmpState>),
    /// The curve was a (−1)-configuration; the ambient real locus after the
    /// contraction is recorded.
    Contracted { real_locus: ClosedSurface },
    MinusTwoCases(MinusTwoCaseReport),
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub step: String,
    pub csq: i64,
    pub pair: TopPair,
}

#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub rows: Vec<TraceRow>,
    pub terminal: MmpState,
    pub restored: bool,
}

fn unit_class(rank: usize, at: usize) -> Vec<Q> {
    let mut v = vec![q(0); rank];
    v[at] = q(1);
    v
}

/// Construct a terminal state of the calculus.
pub fn end_state(kind: EndStateKind) -> Result<MmpState, MmpError> {
    let (lattice, pair, sides) = match kind {
        EndStateKind::P1BundleSection { csq, form } => {
            let even = csq.rem_euclid(2) == 0;
            match (even, form) {
                (true, SectionForm::Klein) | (false, SectionForm::Torus) => {
                    return Err(MmpError::ParityError { csq, form });
                }
                _ => {}
            }
            let n = csq.unsigned_abs() as u32;
            let curve = if csq <= 0 { vec![1, 0] } else { vec![1, csq] };
            let lattice = PicLattice::new(BaseSurface::Hirzebruch(n), &curve)?;
            let pair = match form {
                SectionForm::Torus => TopPair::torus_essential(),
                SectionForm::Klein => TopPair::klein_line(),
            };
            (lattice, pair, None)
        }
        EndStateKind::P2Conic => {
            let lattice = PicLattice::new(BaseSurface::P2, &[2])?;
            let moebius = ClosedSurface::non_orientable(1);
            let disc = ClosedSurface::orientable(0);
            (lattice, TopPair::separating(moebius, disc), Some((moebius, disc)))
        }
        EndStateKind::QuadricSection => {
            let lattice = PicLattice::new(BaseSurface::Quadric, &[1, 1])?;
            let s2 = ClosedSurface::orientable(0);
            (lattice, TopPair::sphere_circle(), Some((s2, s2)))
        }
        EndStateKind::P2Line => {
            (PicLattice::new(BaseSurface::P2, &[1])?, TopPair::rp2_line(), None)
        }
        EndStateKind::ConicBundleFiber { fiber } => match fiber {
            FiberForm::T2 => (
                PicLattice::new(BaseSurface::Hirzebruch(0), &[0, 1])?,
                TopPair::torus_essential(),
                None,
            ),
            FiberForm::K => (
                PicLattice::new(BaseSurface::Hirzebruch(1), &[0, 1])?,
                TopPair::klein_fiber(),
                None,
            ),
            FiberForm::S2 => {
                let lattice = PicLattice::with_class(
                    BaseSurface::Quadric,
                    vec![Center::ConjPair { on_curve: true }],
                    vec![q(1), q(1), q(-1), q(-1)],
                )?;
                let s2 = ClosedSurface::orientable(0);
                (lattice, TopPair::sphere_circle(), Some((s2, s2)))
            }
        },
        EndStateKind::MinusOne { rest } => {
            let lattice = match rest {
                ClosedSurface::Orientable { genus: 1 } => {
                    let centers = vec![Center::Real { on_curve: false }];
                    PicLattice::with_class(BaseSurface::P1xP1, centers, unit_class(3, 2))?
                }
                ClosedSurface::NonOrientable { crosscaps } => {
                    let centers = vec![Center::Real { on_curve: false }; crosscaps as usize];
                    let rank = 1 + crosscaps as usize;
                    PicLattice::with_class(BaseSurface::P2, centers, unit_class(rank, rank - 1))?
                }
                _ => {
                    return Err(MmpError::Domain(format!(
                        "one-sided end state needs rest in {{r·RP2, T2}}, got {rest}"
                    )));
                }
            };
            (lattice, TopPair::one_sided(rest), None)
        }
        EndStateKind::MinusTwoKfT2 => {
            let centers = vec![Center::Real { on_curve: true }; 4];
            let curve = vec![q(1), q(1), q(-1), q(-1), q(-1), q(-1)];
            let lattice = PicLattice::with_class(BaseSurface::Quadric, centers, curve)?;
            (lattice, TopPair::non_sep(ClosedSurface::orientable(1), false), None)
        }
    };

    let csq_q = lattice.curve_self_int();
    debug_assert!(csq_q.is_integer());
    let csq = csq_q.to_integer();
    let end = EndSnapshot { kind, lattice: lattice.clone(), pair, csq, sides };
    let state = MmpState { lattice, pair, csq, sides, history: Vec::new(), end };
    state.check_invariants()?;
    Ok(state)
}

/// How one inverse step transforms (pair, side record). A separating pair
/// stores its caps in canonical order, so the geometric left/right must come
/// from the side record, not from the pair.
fn step_pair_transition(
    kind: StepKind,
    pair: &TopPair,
    sides: &Option<Sides>,
) -> Result<(TopPair, Option<Sides>), MmpError> {
    match kind {
        StepKind::ConjPairOffCurve | StepKind::ConjPairOnCurve => Ok((*pair, *sides)),
        StepKind::RealOffCurve { side } => match (sides, side) {
            (Some((l, r)), Side::Left) => {
                let l = crate::pairalg::surface_sum(*l, RP2);
                Ok((TopPair::separating(l, *r), Some((l, *r))))
            }
            (Some((l, r)), Side::Right) => {
                let r = crate::pairalg::surface_sum(*r, RP2);
                Ok((TopPair::separating(*l, r), Some((*l, r))))
            }
            _ => Ok((pair.sum_surface(RP2, side)?, None)),
        },
        StepKind::RealOnCurve => Ok((pair.sum_rp2_line(), None)),
        StepKind::ContractC => Err(MmpError::Domain("contract-c does not act on pairs".into())),
    }
}

impl MmpState {
    pub fn end_kind(&self) -> EndStateKind {
        self.end.kind
    }

    /// Centers declared by the end state itself (indices below this are
    /// furniture; inverse-step centers follow, one per history entry).
    pub fn furniture_count(&self) -> usize {
        self.end.lattice.centers.len()
    }

    /// Synchronization checks that must hold at every state: csq is the
    /// lattice self-intersection, csq parity matches two-sidedness, the
    /// real locus of the lattice is the underlying surface of the pair, and
    /// the curve class is conjugation-invariant.
    pub fn check_invariants(&self) -> Result<(), MmpError> {
        let viol = |msg: String| Err(MmpError::Invariant(msg));
        let csq_q = self.lattice.curve_self_int();
        if !csq_q.is_integer() || csq_q.to_integer() != self.csq {
            return viol(format!("csq {} != lattice self-intersection {}", self.csq, csq_q));
        }
        if (self.csq.rem_euclid(2) == 0) != self.pair.is_two_sided() {
            return viol(format!("csq {} parity contradicts sidedness of {}", self.csq, self.pair));
        }
        let locus = self.lattice.real_topology();
        if locus != self.pair.underlying_surface() {
            return viol(format!(
                "lattice real locus {locus} != pair underlying surface {}",
                self.pair.underlying_surface()
            ));
        }
        if !self.lattice.is_conjugation_invariant(&self.lattice.curve)? {
            return viol("curve class is not conjugation-invariant".into());
        }
        match (&self.pair, &self.sides) {
            (TopPair::Separating { .. }, Some((l, r))) => {
                if TopPair::separating(*l, *r) != self.pair {
                    return viol(format!("side record ({l}, {r}) does not match {}", self.pair));
                }
            }
            (TopPair::Separating { .. }, None) => {
                return viol("separating pair without side record".into());
            }
            (_, Some(_)) => return viol("side record on a non-separating pair".into()),
            (_, None) => {}
        }
        Ok(())
    }

    /// Apply one inverse step (a blow-up), returning the new state.
    pub fn apply_inverse_step(&self, kind: StepKind) -> Result<MmpState, MmpError> {
        let record = StepRecord {
            kind,
            pair_before: self.pair,
            sides_before: self.sides,
            csq_before: self.csq,
        };
        let mut s = self.clone();
        match kind {
            StepKind::ContractC => {
                return Err(MmpError::Domain(
                    "contract-c is a forward step; use apply_forward_step".into(),
                ));
            }
            StepKind::ConjPairOffCurve => {
                s.lattice.blow_up(Center::ConjPair { on_curve: false });
            }
            StepKind::ConjPairOnCurve => {
                s.lattice.blow_up(Center::ConjPair { on_curve: true });
                s.csq -= 2;
            }
            StepKind::RealOffCurve { .. } => {
                (s.pair, s.sides) = step_pair_transition(kind, &self.pair, &self.sides)?;
                s.lattice.blow_up(Center::Real { on_curve: false });
            }
            StepKind::RealOnCurve => {
                (s.pair, s.sides) = step_pair_transition(kind, &self.pair, &self.sides)?;
                s.lattice.blow_up(Center::Real { on_curve: true });
                s.csq -= 1;
            }
        }
        s.history.push(record);
        s.check_invariants()?;
        Ok(s)
    }

    /// Contract a tracked target. `Center(i)` undoes the most recent inverse
    /// step (exact round trip) or, at a bare end state, removes a furniture
    /// center. `Curve` dispatches on csq: −1 contracts to a surface without
    /// marked curve, −2 returns the case report, ≤ −3 is out of scope, ≥ 0
    /// is not contractible.
    pub fn apply_forward_step(&self, target: ForwardTarget) -> Result<ForwardOutcome, MmpError> {
        match target {
            ForwardTarget::Curve => match self.csq {
                c if c >= 0 => Err(MmpError::NotContractible { csq: c }),
                -1 => match self.pair {
                    TopPair::OneSided { cap } => Ok(ForwardOutcome::Contracted { real_locus: cap }),
                    _ => Err(MmpError::Invariant(format!(
                        "csq −1 state carries a two-sided pair {}",
                        self.pair
                    ))),
                },
                -2 => Ok(ForwardOutcome::MinusTwoCases(MinusTwoCaseReport {
                    cases: vec![
                        MinusTwoCase {
                            model: "degenerate conic bundle over the quadric cone".into(),
                            rational: true,
                        },
                        MinusTwoCase { model: "degree-one del Pezzo".into(), rational: false },
                        MinusTwoCase { model: "degree-two del Pezzo".into(), rational: false },
                    ],
                    lattice_solutions: minus_two_solutions(),
                })),
                c => Err(MmpError::MinusThreeOutOfScope { csq: c }),
            },
            ForwardTarget::Center(idx) => self.contract_center(idx).map(|s| ForwardOutcome::State(Box::new(s))),
        }
    }

    fn contract_center(&self, idx: usize) -> Result<MmpState, MmpError> {
        let furniture = self.furniture_count();
        if idx >= self.lattice.centers.len() {
            return Err(MmpError::Domain(format!("no tracked center {idx}")));
        }
        if idx >= furniture {
            // Inverse-step center: only the most recent one can be undone
            // directly; earlier ones go through run_forward.
            let last = furniture + self.history.len() - 1;
            if idx != last {
                return Err(MmpError::Domain(format!(
                    "center {idx} is buried; undo the most recent step ({last}) or run_forward"
                )));
            }
            let mut s = self.clone();
            let record = s.history.pop().expect("history entry for tracked center");
            s.lattice.contract(idx)?;
            s.pair = record.pair_before;
            s.sides = record.sides_before;
            s.csq = record.csq_before;
            s.check_invariants()?;
            return Ok(s);
        }
        if !self.history.is_empty() {
            return Err(MmpError::Domain(
                "replay inverse steps (run_forward) before touching end-state furniture".into(),
            ));
        }
        let center = self.lattice.centers[idx];
        let base_rank = self.lattice.base.rank();
        let coord = base_rank
            + self.lattice.centers[..idx].iter().map(Center::dims).sum::<usize>();
        if center.dims() == 1 && self.lattice.curve == unit_class(self.lattice.rank(), coord) {
            return Err(MmpError::Domain(
                "this center carries the curve itself; contract it via contract-c".into(),
            ));
        }
        let mut s = self.clone();
        match center {
            Center::ConjPair { on_curve } => {
                s.lattice.contract(idx)?;
                if on_curve {
                    s.csq += 2;
                }
            }
            Center::Real { on_curve: true } => match self.pair {
                TopPair::NonSepTwoSided { cap, total_orientable: false } => {
                    s.lattice.contract(idx)?;
                    s.pair = TopPair::one_sided(cap);
                    s.csq += 1;
                    s.sides = None;
                }
                _ => {
                    return Err(MmpError::Domain(format!(
                        "real-locus change of contracting an on-curve point is ambiguous from {}",
                        self.pair
                    )));
                }
            },
            Center::Real { on_curve: false } => match self.pair {
                TopPair::OneSided { cap: ClosedSurface::NonOrientable { crosscaps } }
                    if crosscaps >= 2 =>
                {
                    s.lattice.contract(idx)?;
                    s.pair = TopPair::one_sided(ClosedSurface::non_orientable(crosscaps - 1));
                }
                _ => {
                    return Err(MmpError::Domain(format!(
                        "real-locus change of contracting an off-curve point is ambiguous from {}",
                        self.pair
                    )));
                }
            },
        }
        // The contraction produced a smaller bare state; re-snapshot it (the
        // catalog tag of the ancestor is retained for display).
        s.end = EndSnapshot {
            kind: s.end.kind,
            lattice: s.lattice.clone(),
            pair: s.pair,
            csq: s.csq,
            sides: s.sides,
        };
        s.check_invariants()?;
        Ok(s)
    }

    /// Contract all inverse-step centers — conjugate pairs first (in blow-up
    /// order), then real points most-recent-first — and report the trace.
    /// csq is non-decreasing along the trace and the terminal state must
    /// equal the end-state snapshot.
    pub fn run_forward(&self) -> Result<ForwardTrace, MmpError> {
        let furniture = self.furniture_count();
        let mut cur = self.clone();
        let mut rows = vec![TraceRow { step: "start".into(), csq: cur.csq, pair: cur.pair }];

        let conj_indices: Vec<usize> = (0..self.history.len())
            .filter(|&h| {
                matches!(
                    self.history[h].kind,
                    StepKind::ConjPairOffCurve | StepKind::ConjPairOnCurve
                )
            })
            .collect();
        let removed_below = |h: usize, removed: &[usize]| -> usize {
            removed.iter().filter(|&&r| r < h).count()
        };
        let mut removed: Vec<usize> = Vec::new();
        for &h in &conj_indices {
            let idx = furniture + h - removed_below(h, &removed);
            cur.lattice.contract(idx)?;
            if self.history[h].kind == StepKind::ConjPairOnCurve {
                cur.csq += 2;
            }
            removed.push(h);
            rows.push(TraceRow {
                step: format!("contract {}", self.history[h].kind),
                csq: cur.csq,
                pair: cur.pair,
            });
        }
        for h in (0..self.history.len()).rev() {
            let record = &self.history[h];
            if conj_indices.contains(&h) {
                continue;
            }
            let (expected, _) =
                step_pair_transition(record.kind, &record.pair_before, &record.sides_before)?;
            if expected != cur.pair {
                return Err(MmpError::Invariant(format!(
                    "replay mismatch at step {h}: expected {expected}, holding {}",
                    cur.pair
                )));
            }
            let idx = furniture + h - removed_below(h, &removed);
            cur.lattice.contract(idx)?;
            if record.kind == StepKind::RealOnCurve {
                cur.csq += 1;
            }
            cur.pair = record.pair_before;
            cur.sides = record.sides_before;
            removed.push(h);
            rows.push(TraceRow {
                step: format!("contract {}", record.kind),
                csq: cur.csq,
                pair: cur.pair,
            });
        }
        cur.history.clear();
        cur.check_invariants()?;
        if rows.windows(2).any(|w| w[1].csq < w[0].csq) {
            return Err(MmpError::Invariant("csq decreased along a forward trace".into()));
        }
        let restored = cur.lattice == self.end.lattice
            && cur.pair == self.end.pair
            && cur.csq == self.end.csq
            && cur.sides == self.end.sides;
        Ok(ForwardTrace { rows, terminal: cur, restored })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairalg::{SPHERE, TORUS};
    use proptest::prelude::*;

    fn surf(k: i32) -> ClosedSurface {
        if k <= 0 {
            ClosedSurface::orientable((-k) as u32)
        } else {
            ClosedSurface::non_orientable(k as u32)
        }
    }

    #[test]
    fn end_state_catalog_pairs_and_csq() {
        let expect = [
            (EndStateKind::P2Line, TopPair::rp2_line(), 1),
            (EndStateKind::P2Conic, TopPair::separating(RP2, SPHERE), 4),
            (EndStateKind::QuadricSection, TopPair::sphere_circle(), 2),
            (
                EndStateKind::ConicBundleFiber { fiber: FiberForm::T2 },
                TopPair::torus_essential(),
                0,
            ),
            (EndStateKind::ConicBundleFiber { fiber: FiberForm::K }, TopPair::klein_fiber(), 0),
            (
                EndStateKind::ConicBundleFiber { fiber: FiberForm::S2 },
                TopPair::sphere_circle(),
                0,
            ),
            (
                EndStateKind::P1BundleSection { csq: 4, form: SectionForm::Torus },
                TopPair::torus_essential(),
                4,
            ),
            (
                EndStateKind::P1BundleSection { csq: -3, form: SectionForm::Klein },
                TopPair::klein_line(),
                -3,
            ),
            (EndStateKind::MinusOne { rest: TORUS }, TopPair::one_sided(TORUS), -1),
            (
                EndStateKind::MinusOne { rest: ClosedSurface::non_orientable(2) },
                TopPair::one_sided(ClosedSurface::non_orientable(2)),
                -1,
            ),
            (EndStateKind::MinusTwoKfT2, TopPair::non_sep(TORUS, false), -2),
        ];
        for (kind, pair, csq) in expect {
            let s = end_state(kind).unwrap();
            assert_eq!((s.pair, s.csq), (pair, csq), "{kind}");
            s.check_invariants().unwrap();
        }
    }

    #[test]
    fn section_parity_is_enforced() {
        assert!(matches!(
            end_state(EndStateKind::P1BundleSection { csq: 3, form: SectionForm::Torus }),
            Err(MmpError::ParityError { .. })
        ));
        assert!(matches!(
            end_state(EndStateKind::P1BundleSection { csq: 0, form: SectionForm::Klein }),
            Err(MmpError::ParityError { .. })
        ));
        assert!(end_state(EndStateKind::MinusOne { rest: SPHERE }).is_err());
        assert!(end_state(EndStateKind::MinusOne { rest: surf(-2) }).is_err());
    }

    #[test]
    fn four_on_curve_points_on_quadric_section() {
        let mut s = end_state(EndStateKind::QuadricSection).unwrap();
        for _ in 0..4 {
            s = s.apply_inverse_step(StepKind::RealOnCurve).unwrap();
        }
        assert_eq!(s.pair, TopPair::non_sep(TORUS, false));
        assert_eq!(s.csq, -2);
        assert_eq!(s.pair, end_state(EndStateKind::MinusTwoKfT2).unwrap().pair);
        let trace = s.run_forward().unwrap();
        assert!(trace.restored);
    }

    #[test]
    fn conic_keeps_track_of_sides() {
        let s = end_state(EndStateKind::P2Conic).unwrap();
        let left = s.apply_inverse_step(StepKind::RealOffCurve { side: Side::Left }).unwrap();
        assert_eq!(left.pair, TopPair::separating(ClosedSurface::non_orientable(2), SPHERE));
        assert_eq!(left.csq, 4);
        let right = left.apply_inverse_step(StepKind::RealOffCurve { side: Side::Right }).unwrap();
        assert_eq!(
            right.pair,
            TopPair::separating(ClosedSurface::non_orientable(2), RP2)
        );
        assert!(matches!(
            s.apply_inverse_step(StepKind::RealOffCurve { side: Side::Any }),
            Err(MmpError::Pair(PairError::SideRequired { .. }))
        ));
        assert!(matches!(
            end_state(EndStateKind::P2Line)
                .unwrap()
                .apply_inverse_step(StepKind::RealOffCurve { side: Side::Left }),
            Err(MmpError::Pair(PairError::SideForbidden { .. }))
        ));
    }

    #[test]
    fn conjugate_steps_never_touch_the_pair() {
        let s = end_state(EndStateKind::P2Conic).unwrap();
        let t = s.apply_inverse_step(StepKind::ConjPairOnCurve).unwrap();
        assert_eq!(t.pair, s.pair);
        assert_eq!(t.csq, s.csq - 2);
        let u = t.apply_inverse_step(StepKind::ConjPairOffCurve).unwrap();
        assert_eq!(u.pair, s.pair);
        assert_eq!(u.csq, t.csq);
    }

    #[test]
    fn immediate_undo_is_the_identity() {
        let s = end_state(EndStateKind::QuadricSection).unwrap();
        let t = s.apply_inverse_step(StepKind::RealOnCurve).unwrap();
        let idx = t.lattice.centers.len() - 1;
        match t.apply_forward_step(ForwardTarget::Center(idx)).unwrap() {
            ForwardOutcome::State(u) => assert_eq!(*u, s),
            other => panic!("expected a state, got {other:?}"),
        }
    }

    #[test]
    fn forward_replay_restores_end_state() {
        let mut s = end_state(EndStateKind::P2Line).unwrap();
        for kind in [
            StepKind::RealOnCurve,
            StepKind::ConjPairOnCurve,
            StepKind::RealOffCurve { side: Side::Any },
            StepKind::RealOnCurve,
        ] {
            s = s.apply_inverse_step(kind).unwrap();
        }
        let trace = s.run_forward().unwrap();
        assert!(trace.restored);
        assert_eq!(trace.rows.len(), 5);
        assert!(trace.rows.windows(2).all(|w| w[0].csq <= w[1].csq));
        assert_eq!(trace.terminal.pair, TopPair::rp2_line());
    }

    #[test]
    fn contract_curve_dispatch() {
        let minus_one = end_state(EndStateKind::MinusOne { rest: TORUS }).unwrap();
        match minus_one.apply_forward_step(ForwardTarget::Curve).unwrap() {
            ForwardOutcome::Contracted { real_locus } => assert_eq!(real_locus, TORUS),
            other => panic!("expected contraction, got {other:?}"),
        }
        let minus_two = end_state(EndStateKind::MinusTwoKfT2).unwrap();
        match minus_two.apply_forward_step(ForwardTarget::Curve).unwrap() {
            ForwardOutcome::MinusTwoCases(report) => {
                let flags: Vec<bool> = report.cases.iter().map(|c| c.rational).collect();
                assert_eq!(flags, vec![true, false, false]);
                assert_eq!(report.lattice_solutions.filtered, vec![(-1, -1, 2)]);
            }
            other => panic!("expected case report, got {other:?}"),
        }
        assert!(matches!(
            end_state(EndStateKind::QuadricSection)
                .unwrap()
                .apply_forward_step(ForwardTarget::Curve),
            Err(MmpError::NotContractible { csq: 2 })
        ));
        let minus_three = minus_one.apply_inverse_step(StepKind::ConjPairOnCurve).unwrap();
        assert!(matches!(
            minus_three.apply_forward_step(ForwardTarget::Curve),
            Err(MmpError::MinusThreeOutOfScope { csq: -3 })
        ));
    }

    #[test]
    fn furniture_contraction() {
        let fiber = end_state(EndStateKind::ConicBundleFiber { fiber: FiberForm::S2 }).unwrap();
        match fiber.apply_forward_step(ForwardTarget::Center(0)).unwrap() {
            ForwardOutcome::State(s) => {
                let quadric = end_state(EndStateKind::QuadricSection).unwrap();
                assert_eq!((s.lattice.clone(), s.pair, s.csq), (quadric.lattice, quadric.pair, 2));
            }
            other => panic!("expected a state, got {other:?}"),
        }

        let kf = end_state(EndStateKind::MinusTwoKfT2).unwrap();
        match kf.apply_forward_step(ForwardTarget::Center(2)).unwrap() {
            ForwardOutcome::State(s) => {
                assert_eq!(s.pair, TopPair::one_sided(TORUS));
                assert_eq!(s.csq, -1);
            }
            other => panic!("expected a state, got {other:?}"),
        }

        let tower = end_state(EndStateKind::MinusOne { rest: surf(3) }).unwrap();
        match tower.apply_forward_step(ForwardTarget::Center(0)).unwrap() {
            ForwardOutcome::State(s) => {
                let smaller = end_state(EndStateKind::MinusOne { rest: surf(2) }).unwrap();
                assert_eq!((s.lattice.clone(), s.pair), (smaller.lattice, smaller.pair));
            }
            other => panic!("expected a state, got {other:?}"),
        }
        // The center carrying the curve itself is reserved for contract-c.
        assert!(tower.apply_forward_step(ForwardTarget::Center(2)).is_err());
        // Furniture is frozen while inverse steps are pending.
        let busy = kf.apply_inverse_step(StepKind::ConjPairOffCurve).unwrap();
        assert!(busy.apply_forward_step(ForwardTarget::Center(0)).is_err());
    }

    #[test]
    fn step_and_end_state_strings_round_trip() {
        let steps = [
            StepKind::ConjPairOffCurve,
            StepKind::ConjPairOnCurve,
            StepKind::RealOffCurve { side: Side::Left },
            StepKind::RealOffCurve { side: Side::Right },
            StepKind::RealOffCurve { side: Side::Any },
            StepKind::RealOnCurve,
            StepKind::ContractC,
        ];
        for s in steps {
            assert_eq!(s.to_string().parse::<StepKind>().unwrap(), s);
        }
        let ends = [
            EndStateKind::P2Line,
            EndStateKind::P2Conic,
            EndStateKind::QuadricSection,
            EndStateKind::ConicBundleFiber { fiber: FiberForm::T2 },
            EndStateKind::ConicBundleFiber { fiber: FiberForm::K },
            EndStateKind::ConicBundleFiber { fiber: FiberForm::S2 },
            EndStateKind::P1BundleSection { csq: -4, form: SectionForm::Torus },
            EndStateKind::P1BundleSection { csq: 7, form: SectionForm::Klein },
            EndStateKind::MinusOne { rest: TORUS },
            EndStateKind::MinusOne { rest: surf(1) },
            EndStateKind::MinusOne { rest: surf(4) },
            EndStateKind::MinusTwoKfT2,
        ];
        for e in ends {
            assert_eq!(e.to_string().parse::<EndStateKind>().unwrap(), e);
        }
        assert!("section-t2:x".parse::<EndStateKind>().is_err());
        assert!("minus-one:s2".parse::<EndStateKind>().is_err());
        assert!("real-off:middle".parse::<StepKind>().is_err());
    }

    fn arb_end_kind() -> impl Strategy<Value = EndStateKind> {
        prop_oneof![
            Just(EndStateKind::P2Line),
            Just(EndStateKind::P2Conic),
            Just(EndStateKind::QuadricSection),
            Just(EndStateKind::MinusTwoKfT2),
            Just(EndStateKind::ConicBundleFiber { fiber: FiberForm::T2 }),
            Just(EndStateKind::ConicBundleFiber { fiber: FiberForm::K }),
            Just(EndStateKind::ConicBundleFiber { fiber: FiberForm::S2 }),
            (-4i64..=4).prop_map(|c| {
                let form = if c.rem_euclid(2) == 0 { SectionForm::Torus } else { SectionForm::Klein };
                EndStateKind::P1BundleSection { csq: c, form }
            }),
            Just(EndStateKind::MinusOne { rest: TORUS }),
            (1u32..=4).prop_map(|k| EndStateKind::MinusOne { rest: ClosedSurface::non_orientable(k) }),
        ]
    }

    fn arb_step() -> impl Strategy<Value = StepKind> {
        prop_oneof![
            Just(StepKind::ConjPairOffCurve),
            Just(StepKind::ConjPairOnCurve),
            Just(StepKind::RealOffCurve { side: Side::Any }),
            Just(StepKind::RealOffCurve { side: Side::Left }),
            Just(StepKind::RealOffCurve { side: Side::Right }),
            Just(StepKind::RealOnCurve),
        ]
    }

    proptest! {
        #[test]
        fn random_sequences_replay_to_their_end_state(
            kind in arb_end_kind(),
            steps in proptest::collection::vec(arb_step(), 0..10),
        ) {
            let mut s = end_state(kind).unwrap();
            for step in steps {
                // Steps with an inapplicable side are skipped; everything
                // that applies must keep the invariants.
                if let Ok(next) = s.apply_inverse_step(step) {
                    next.check_invariants().unwrap();
                    s = next;
                }
            }
            let trace = s.run_forward().unwrap();
            prop_assert!(trace.restored);
            prop_assert!(trace.rows.windows(2).all(|w| w[0].csq <= w[1].csq));
        }
    }
}
