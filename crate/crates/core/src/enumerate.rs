//! Enumeration of curve types reachable at a given self-intersection, the
//! classification table they assemble into, and the approximability verdict
//! with a replayable construction plan for every positive answer.
//!
//! Complexity of a pair means crosscaps plus twice the genus of the underlying
//! surface (the drop of χ below the sphere); every operation below is
//! truncated by that measure, which is intrinsic to the pair and so commutes
//! with the set differences taken between adjacent levels.

use crate::cellsurf::{self, BlowUpLocation, CellError};
use crate::mmp::{self, EndStateKind, FiberForm, MmpError, SectionForm, StepKind};
use crate::pairalg::{surface_sum, ClosedSurface, Side, TopPair, RP2, SPHERE};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("self-intersection {0} is below the tracked range (e >= -2)")]
    OutOfScope(i64),
    #[error("table fit failure: {0}")]
    FitFailure(String),
    #[error("no construction plan for {0}")]
    NoWitness(TopPair),
    #[error(transparent)]
    Mmp(#[from] MmpError),
    #[error(transparent)]
    Cell(#[from] CellError),
}

/// Crosscaps plus twice the genus of the underlying surface: 2 − χ.
pub fn pair_complexity(p: &TopPair) -> u32 {
    (2 - p.underlying_surface().euler_char()) as u32
}

/// Rebuild through the constructors so raw struct literals with unsorted
/// sides or a stray `total_orientable` bit compare canonically.
fn canonical(p: &TopPair) -> TopPair {
    match *p {
        TopPair::Separating { sides: [a, b] } => TopPair::separating(a, b),
        TopPair::OneSided { cap } => TopPair::one_sided(cap),
        TopPair::NonSepTwoSided { cap, total_orientable } => TopPair::non_sep(cap, total_orientable),
    }
}

/// Where a root configuration's curve self-intersection can sit. Sections of
/// P¹-bundles exist at every csq of the matching parity; the other roots are
/// pinned.
#[derive(Clone, Copy)]
enum SeedCsq {
    Fixed(i64),
    EvenSections,
    OddSections,
}

/// Root pairs of the descent, one per terminal configuration usable at some
/// level, with their csq discipline.
fn seed_states(bound: u32) -> Vec<(TopPair, SeedCsq)> {
    let mut seeds = vec![
        (TopPair::torus_essential(), SeedCsq::EvenSections),
        (TopPair::klein_line(), SeedCsq::OddSections),
        // Conic in the plane: Möbius side and disc side.
        (TopPair::separating(RP2, SPHERE), SeedCsq::Fixed(4)),
        (TopPair::sphere_circle(), SeedCsq::Fixed(2)),
        (TopPair::rp2_line(), SeedCsq::Fixed(1)),
        // Smooth conic-bundle fibers over the three real forms.
        (TopPair::torus_essential(), SeedCsq::Fixed(0)),
        (TopPair::klein_fiber(), SeedCsq::Fixed(0)),
        (TopPair::sphere_circle(), SeedCsq::Fixed(0)),
        (TopPair::one_sided(ClosedSurface::orientable(1)), SeedCsq::Fixed(-1)),
        (TopPair::non_sep(ClosedSurface::orientable(1), false), SeedCsq::Fixed(-2)),
    ];
    // (ℝP²,ℓ)#rℝP² exceptional configurations; complexity r+1 caps r.
    for r in 1..bound.max(1) {
        seeds.push((TopPair::one_sided(ClosedSurface::non_orientable(r)), SeedCsq::Fixed(-1)));
    }
    seeds
}

fn add_crosscaps(s: ClosedSurface, n: u32) -> ClosedSurface {
    if n == 0 {
        s
    } else {
        surface_sum(s, ClosedSurface::non_orientable(n))
    }
}

/// All pairs obtainable from one root at level `e`: r₁ pair-sums with
/// (ℝP², line) bring the root csq down to e (together with conjugate-pair
/// blow-ups worth 2 each), then free ℝP² sums away from the curve. A pair
/// that is still separating (only possible with r₁ = 0) takes its free sums
/// side by side; side order washes out in the sorted canonical form.
fn expand_seed(seed: (TopPair, SeedCsq), e: i64, bound: u32) -> Vec<TopPair> {
    let (root, csq) = seed;
    let mut out = Vec::new();
    let c0 = pair_complexity(&root);
    if c0 > bound {
        return out;
    }
    let mut p = root;
    for r1 in 0..=(bound - c0) {
        if r1 > 0 {
            p = p.sum_rp2_line();
        }
        let usable = match csq {
            SeedCsq::Fixed(m) => {
                let d = m - e - i64::from(r1);
                d >= 0 && d % 2 == 0
            }
            SeedCsq::EvenSections => (e + i64::from(r1)).rem_euclid(2) == 0,
            SeedCsq::OddSections => (e + i64::from(r1)).rem_euclid(2) == 1,
        };
        if !usable {
            continue;
        }
        let budget = bound - c0 - r1;
        match p {
            TopPair::Separating { sides: [a, b] } => {
                for x in 0..=budget {
                    let sa = add_crosscaps(a, x);
                    for y in 0..=(budget - x) {
                        out.push(TopPair::separating(sa, add_crosscaps(b, y)));
                    }
                }
            }
            _ => {
                let mut q = p;
                out.push(q);
                for _ in 0..budget {
                    q = q.sum_surface(RP2, Side::Any).expect("cap sum never needs a side");
                    out.push(q);
                }
            }
        }
    }
    out
}

/// Every pair of complexity ≤ bound carried by some surface with a curve of
/// self-intersection `e`.
pub fn reachable_types(e: i64, bound: u32) -> Result<BTreeSet<TopPair>, EnumError> {
    if e < -2 {
        return Err(EnumError::OutOfScope(e));
    }
    let found = crate::par_flat_map(seed_states(bound), move |seed| expand_seed(seed, e, bound));
    let set: BTreeSet<TopPair> = found.into_iter().collect();
    debug_assert!(set.iter().all(TopPair::comessatti_realizable));
    Ok(set)
}

/// Types at level `e` that have already disappeared at level `e + 2`. Empty
/// from e = 3 up, where the reachable sets have stabilized.
pub fn new_types(e: i64, bound: u32) -> Result<BTreeSet<TopPair>, EnumError> {
    let here = reachable_types(e, bound)?;
    let above = reachable_types(e + 2, bound)?;
    Ok(here.difference(&above).copied().collect())
}

/// One-parameter family of pairs (or a single pair) as printed in the
/// classification table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamFamily {
    /// (𝕋²,ℓ) # rℝP², r ≥ r_min (r = 0 keeps the orientable total).
    TorusSectionCrosscaps { r_min: u32 },
    /// (𝕂,ℓ) # rℝP², r ≥ r_min.
    KleinSectionCrosscaps { r_min: u32 },
    /// r₁ℝP² # (𝕊²,ℓ) # r₂ℝP², unordered, r₁ + r₂ ≥ min_total.
    SeparatingCrosscaps { min_total: u32 },
    Single { pair: TopPair },
}

impl ParamFamily {
    /// Concrete members of complexity ≤ bound.
    pub fn instances(&self, bound: u32) -> BTreeSet<TopPair> {
        let mut out = BTreeSet::new();
        match *self {
            // Instance complexity is r + 2 for both section families.
            ParamFamily::TorusSectionCrosscaps { r_min } => {
                for r in r_min..=bound.saturating_sub(2) {
                    if bound < 2 {
                        break;
                    }
                    out.insert(if r == 0 {
                        TopPair::non_sep(SPHERE, true)
                    } else {
                        TopPair::non_sep(ClosedSurface::non_orientable(r), false)
                    });
                }
            }
            ParamFamily::KleinSectionCrosscaps { r_min } => {
                for r in r_min..=bound.saturating_sub(2) {
                    if bound < 2 {
                        break;
                    }
                    out.insert(TopPair::one_sided(ClosedSurface::non_orientable(1 + r)));
                }
            }
            ParamFamily::SeparatingCrosscaps { min_total } => {
                for hi in 1..=bound {
                    for lo in 0..=hi {
                        let t = hi + lo;
                        if t >= min_total && t <= bound {
                            out.insert(TopPair::separating(
                                add_crosscaps(SPHERE, hi),
                                add_crosscaps(SPHERE, lo),
                            ));
                        }
                    }
                }
            }
            ParamFamily::Single { pair } => {
                if pair_complexity(&pair) <= bound {
                    out.insert(pair);
                }
            }
        }
        out
    }
}

impl fmt::Display for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ParamFamily::TorusSectionCrosscaps { r_min } => {
                write!(f, "(T2,l) # r*RP2, r >= {r_min}")
            }
            ParamFamily::KleinSectionCrosscaps { r_min } => {
                write!(f, "(K,l) # r*RP2, r >= {r_min}")
            }
            ParamFamily::SeparatingCrosscaps { min_total } => {
                write!(f, "r1*RP2 # (S2,l) # r2*RP2, r1+r2 >= {min_total}")
            }
            ParamFamily::Single { pair } => write!(f, "{pair}"),
        }
    }
}

/// Row label: a stabilized parity class or a single level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKey {
    EvenGe { min: i64 },
    OddGe { min: i64 },
    Exact { e: i64 },
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RowKey::EvenGe { min } => write!(f, "even e >= {min}"),
            RowKey::OddGe { min } => write!(f, "odd e >= {min}"),
            RowKey::Exact { e } => write!(f, "e = {e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub key: RowKey,
    pub families: Vec<ParamFamily>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTable {
    pub rows: Vec<TableRow>,
}

impl fmt::Display for TypeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            write!(f, "{:<12} |", row.key.to_string())?;
            if row.families.is_empty() {
                write!(f, " (none)")?;
            }
            for (i, fam) in row.families.iter().enumerate() {
                write!(f, "{}{fam}", if i == 0 { " " } else { " ; " })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn torus_section_index(p: &TopPair) -> Option<u32> {
    match *p {
        TopPair::NonSepTwoSided {
            cap: ClosedSurface::Orientable { genus: 0 },
            total_orientable: true,
        } => Some(0),
        TopPair::NonSepTwoSided {
            cap: ClosedSurface::NonOrientable { crosscaps },
            total_orientable: false,
        } => Some(crosscaps),
        _ => None,
    }
}

fn klein_section_index(p: &TopPair) -> Option<u32> {
    match *p {
        TopPair::OneSided { cap: ClosedSurface::NonOrientable { crosscaps } } => {
            Some(crosscaps - 1)
        }
        _ => None,
    }
}

/// Crosscap counts of a separating pair whose sides are spheres-with-crosscaps
/// (sphere = 0); genus on a side disqualifies the shape.
fn separating_caps(p: &TopPair) -> Option<(u32, u32)> {
    let cc = |s: ClosedSurface| match s {
        ClosedSurface::Orientable { genus: 0 } => Some(0),
        ClosedSurface::Orientable { .. } => None,
        ClosedSurface::NonOrientable { crosscaps } => Some(crosscaps),
    };
    match *p {
        TopPair::Separating { sides: [a, b] } => {
            let (a, b) = (cc(a)?, cc(b)?);
            Some((a.max(b), a.min(b)))
        }
        _ => None,
    }
}

/// Recognize full truncated arithmetic progressions (at least three members)
/// in a concrete set and fold them into families; whatever is left stays a
/// single. A partially present progression of three or more members is a
/// malformed table and fails rather than mislabel.
fn fit_families(set: &BTreeSet<TopPair>, bound: u32) -> Result<Vec<ParamFamily>, EnumError> {
    let mut leftover = set.clone();
    let mut families = Vec::new();
    let progression = |idx: &BTreeSet<u32>, max: u32| -> Option<u32> {
        let r0 = *idx.iter().next().unwrap();
        let full: BTreeSet<u32> = (r0..=max).collect();
        (idx.len() >= 3 && *idx == full).then_some(r0)
    };

    let torus: BTreeSet<u32> = set.iter().filter_map(torus_section_index).collect();
    if !torus.is_empty() {
        if let Some(r_min) = progression(&torus, bound.saturating_sub(2)) {
            families.push(ParamFamily::TorusSectionCrosscaps { r_min });
            leftover.retain(|p| torus_section_index(p).is_none());
        } else if torus.len() >= 3 {
            return Err(EnumError::FitFailure(format!(
                "(T2,l)-sum members with gaps: {torus:?}"
            )));
        }
    }

    let klein: BTreeSet<u32> = set.iter().filter_map(klein_section_index).collect();
    if !klein.is_empty() {
        if let Some(r_min) = progression(&klein, bound.saturating_sub(2)) {
            families.push(ParamFamily::KleinSectionCrosscaps { r_min });
            leftover.retain(|p| klein_section_index(p).is_none());
        } else if klein.len() >= 3 {
            return Err(EnumError::FitFailure(format!(
                "(K,l)-sum members with gaps: {klein:?}"
            )));
        }
    }

    // The sphere itself ((0,0)) never joins the separating family.
    let seps: BTreeSet<(u32, u32)> = set
        .iter()
        .filter_map(separating_caps)
        .filter(|&c| c != (0, 0))
        .collect();
    if !seps.is_empty() {
        let min_total = seps.iter().map(|&(h, l)| h + l).min().unwrap();
        let expected: BTreeSet<(u32, u32)> = (1..=bound)
            .flat_map(|hi| (0..=hi).map(move |lo| (hi, lo)))
            .filter(|&(h, l)| (min_total..=bound).contains(&(h + l)))
            .collect();
        if seps == expected && seps.len() >= 3 {
            families.push(ParamFamily::SeparatingCrosscaps { min_total });
            leftover.retain(|p| !matches!(separating_caps(p), Some(c) if c != (0, 0)));
        } else if seps.len() >= 3 {
            return Err(EnumError::FitFailure(format!(
                "separating members do not fill their range: {seps:?}"
            )));
        }
    }

    families.extend(leftover.into_iter().map(|pair| ParamFamily::Single { pair }));
    Ok(families)
}

/// The classification table over `e_min ..= e_max`: one merged row per parity
/// above the stabilization threshold (verified, not assumed), one literal
/// `new_types` row per level at 4 and below.
pub fn theorem_table(e_min: i64, e_max: i64, bound: u32) -> Result<TypeTable, EnumError> {
    if e_min < -2 {
        return Err(EnumError::OutOfScope(e_min));
    }
    let mut rows = Vec::new();
    if e_max >= 6 {
        let stable = reachable_types(6, bound)?;
        let mut e = 8;
        while e <= e_max {
            if reachable_types(e, bound)? != stable {
                return Err(EnumError::FitFailure(format!("even rows not stable at e = {e}")));
            }
            e += 2;
        }
        rows.push(TableRow { key: RowKey::EvenGe { min: 6 }, families: fit_families(&stable, bound)? });
    }
    if e_max >= 5 {
        let stable = reachable_types(5, bound)?;
        let mut e = 7;
        while e <= e_max {
            if reachable_types(e, bound)? != stable {
                return Err(EnumError::FitFailure(format!("odd rows not stable at e = {e}")));
            }
            e += 2;
        }
        rows.push(TableRow { key: RowKey::OddGe { min: 5 }, families: fit_families(&stable, bound)? });
    }
    let mut e = e_max.min(4);
    while e >= e_min {
        rows.push(TableRow {
            key: RowKey::Exact { e },
            families: fit_families(&new_types(e, bound)?, bound)?,
        });
        e -= 1;
    }
    Ok(TypeTable { rows })
}

/// The published table (e from −2 up, both parity rows), kept as data so a
/// change is a reviewable diff.
pub fn golden_table() -> TypeTable {
    serde_json::from_str(include_str!("golden_table.json")).expect("built-in table parses")
}

/// Replayable construction of a surface-and-curve carrying a given pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "plan", rename_all = "snake_case")]
pub enum ConstructionPlan {
    /// Start from a terminal configuration and apply inverse steps.
    Mmp { end: EndStateKind, steps: Vec<StepKind> },
    /// Double equator on the sphere with 2g+1 crossings, all resolved by
    /// blow-ups, then extra crosscaps summed into the non-orientable side.
    EquatorResolution { genus: u32, extra_crosscaps: u32 },
}

/// Run a plan back into the pair it constructs.
pub fn replay_plan(plan: &ConstructionPlan) -> Result<TopPair, EnumError> {
    match plan {
        ConstructionPlan::Mmp { end, steps } => {
            let mut state = mmp::end_state(*end)?;
            for &s in steps {
                state = state.apply_inverse_step(s)?;
            }
            Ok(state.pair)
        }
        ConstructionPlan::EquatorResolution { genus, extra_crosscaps } => {
            if *genus == 0 {
                return Err(EnumError::Cell(CellError::InvalidComplex(
                    "the double-equator model needs genus >= 1".into(),
                )));
            }
            let (cs, trace) = cellsurf::equator_double_curve(*genus);
            let (mut cs, mut trace) = cellsurf::resolve_all_nodes(&cs, &trace)?;
            let sides = cellsurf::separating_side_faces(&cs, &trace)?;
            let &(_, face) = sides
                .iter()
                .find(|(s, _)| !s.is_orientable())
                .ok_or_else(|| {
                    EnumError::Cell(CellError::InvalidComplex(
                        "resolved equator has no non-orientable side".into(),
                    ))
                })?;
            for _ in 0..*extra_crosscaps {
                let (s2, t2) =
                    cellsurf::blow_up_point(&cs, &trace, BlowUpLocation::OffCurve { face })?;
                cs = s2;
                trace = t2;
            }
            Ok(cellsurf::canonical_pair(&cs, &trace)?)
        }
    }
}

fn mmp_plan(end: EndStateKind, steps: Vec<StepKind>) -> ConstructionPlan {
    ConstructionPlan::Mmp { end, steps }
}

fn repeat_step(kind: StepKind, n: u32) -> Vec<StepKind> {
    std::iter::repeat(kind).take(n as usize).collect()
}

/// Conic in the plane, then crosscaps off the curve: `left` total on the
/// Möbius side (so left − 1 blow-ups) and `right` on the disc side.
fn conic_plan(left: u32, right: u32) -> ConstructionPlan {
    let mut steps = repeat_step(StepKind::RealOffCurve { side: Side::Left }, left - 1);
    steps.extend(repeat_step(StepKind::RealOffCurve { side: Side::Right }, right));
    mmp_plan(EndStateKind::P2Conic, steps)
}

/// A construction plan for any pair that is realizable and not the
/// null-homotopic curve on the torus. Every returned plan has been replayed
/// and checked against the request before it is handed out.
pub fn witness(p: &TopPair) -> Result<ConstructionPlan, EnumError> {
    use ClosedSurface::{NonOrientable, Orientable};
    let p = canonical(p);
    if !p.comessatti_realizable() || p == TopPair::torus_null() {
        return Err(EnumError::NoWitness(p));
    }
    let off_any = StepKind::RealOffCurve { side: Side::Any };
    let plan = match p {
        TopPair::Separating { sides: [a, b] } => match (a, b) {
            (Orientable { genus: 0 }, Orientable { genus: 0 }) => {
                mmp_plan(EndStateKind::QuadricSection, Vec::new())
            }
            (Orientable { genus: 0 }, NonOrientable { crosscaps }) => conic_plan(crosscaps, 0),
            (Orientable { genus }, NonOrientable { crosscaps }) => {
                ConstructionPlan::EquatorResolution { genus, extra_crosscaps: crosscaps - 1 }
            }
            (NonOrientable { crosscaps: r1 }, NonOrientable { crosscaps: r2 }) => {
                conic_plan(r1, r2)
            }
            // Two handle-carrying orientable sides never pass the realizability
            // and torus-null gates above.
            _ => return Err(EnumError::NoWitness(p)),
        },
        TopPair::OneSided { cap } => match cap {
            Orientable { genus: 0 } => mmp_plan(EndStateKind::P2Line, Vec::new()),
            NonOrientable { crosscaps } => mmp_plan(
                EndStateKind::P1BundleSection { csq: 1, form: SectionForm::Klein },
                repeat_step(off_any, crosscaps - 1),
            ),
            Orientable { genus } => {
                mmp_plan(EndStateKind::P2Line, repeat_step(StepKind::RealOnCurve, 2 * genus))
            }
        },
        TopPair::NonSepTwoSided { cap, total_orientable: true } => match cap {
            Orientable { genus: 0 } => mmp_plan(
                EndStateKind::P1BundleSection { csq: 0, form: SectionForm::Torus },
                Vec::new(),
            ),
            _ => return Err(EnumError::NoWitness(p)),
        },
        TopPair::NonSepTwoSided { cap, total_orientable: false } => {
            let fiber = EndStateKind::ConicBundleFiber { fiber: FiberForm::K };
            match cap {
                Orientable { genus: 0 } => mmp_plan(fiber, Vec::new()),
                NonOrientable { crosscaps } => mmp_plan(fiber, repeat_step(off_any, crosscaps)),
                Orientable { genus } => {
                    mmp_plan(fiber, repeat_step(StepKind::RealOnCurve, 2 * genus))
                }
            }
        }
    };
    if replay_plan(&plan)? != p {
        return Err(EnumError::NoWitness(p));
    }
    Ok(plan)
}

/// Answer of the main classification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// The underlying surface is orientable of genus ≥ 2: no rational surface
    /// carries it.
    NotRealizable { surface: ClosedSurface },
    /// The null-homotopic curve on the torus: realizable, never smoothly
    /// approximable.
    NotApproximable,
    Approximable { witness: ConstructionPlan },
}

/// The main verdict: every realizable pair except the null-homotopic curve on
/// the torus comes with a checked construction plan.
pub fn classify_approximable(p: &TopPair) -> Verdict {
    let p = canonical(p);
    if !p.comessatti_realizable() {
        return Verdict::NotRealizable { surface: p.underlying_surface() };
    }
    if p == TopPair::torus_null() {
        return Verdict::NotApproximable;
    }
    match witness(&p) {
        Ok(w) => Verdict::Approximable { witness: w },
        Err(e) => unreachable!("realizable pair {p} other than (T2,null) must have a plan: {e}"),
    }
}
