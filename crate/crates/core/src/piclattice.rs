//! Exact intersection-lattice bookkeeping for rational surfaces over ℝ:
//! a base surface plus a stack of blow-up centers (real points or conjugate
//! pairs), a distinguished curve class, and the anti-holomorphic involution.
//!
//! All arithmetic is over ℚ with `num::rational::Ratio<i64>` — no floats.

use crate::pairalg::{surface_sum, ClosedSurface, RP2};
use num::rational::Ratio;
use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

pub type Q = Ratio<i64>;

pub fn q(n: i64) -> Q {
    Ratio::from_integer(n)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("class has {got} coordinates, lattice rank is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class is not integral")]
    NonIntegralClass,
    #[error("domain error: {0}")]
    DomainError(String),
}

/// Minimal real rational surfaces the calculus terminates on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSurface {
    P2,
    Quadric,
    Hirzebruch(u32),
    P1xP1,
}

impl BaseSurface {
    pub fn rank(&self) -> usize {
        match self {
            BaseSurface::P2 => 1,
            _ => 2,
        }
    }

    /// Gram matrix of the base block. The quadric carries its full rank-2
    /// hyperbolic plane (the two rulings), with the real plane section (1,1);
    /// conjugation swaps the rulings.
    fn gram(&self) -> Vec<Vec<i64>> {
        match self {
            BaseSurface::P2 => vec![vec![1]],
            BaseSurface::Quadric | BaseSurface::P1xP1 => vec![vec![0, 1], vec![1, 0]],
            BaseSurface::Hirzebruch(n) => vec![vec![-(*n as i64), 1], vec![1, 0]],
        }
    }

    fn k_coords(&self) -> Vec<i64> {
        match self {
            BaseSurface::P2 => vec![-3],
            BaseSurface::Quadric | BaseSurface::P1xP1 => vec![-2, -2],
            BaseSurface::Hirzebruch(n) => vec![-2, -(*n as i64 + 2)],
        }
    }

    /// Real point set of the base form.
    pub fn real_topology(&self) -> ClosedSurface {
        match self {
            BaseSurface::P2 => ClosedSurface::non_orientable(1),
            BaseSurface::Quadric => ClosedSurface::orientable(0),
            BaseSurface::P1xP1 => ClosedSurface::orientable(1),
            BaseSurface::Hirzebruch(n) if n % 2 == 0 => ClosedSurface::orientable(1),
            BaseSurface::Hirzebruch(_) => ClosedSurface::non_orientable(2),
        }
    }
}

/// A blow-up center: one real point or one pair of complex-conjugate points.
/// `on_curve` records whether the center lies on the tracked curve, which
/// determines the strict-transform correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Center {
    Real { on_curve: bool },
    ConjPair { on_curve: bool },
}

impl Center {
    pub fn dims(&self) -> usize {
        match self {
            Center::Real { .. } => 1,
            Center::ConjPair { .. } => 2,
        }
    }
    pub fn on_curve(&self) -> bool {
        match self {
            Center::Real { on_curve } | Center::ConjPair { on_curve } => *on_curve,
        }
    }
}

/// Picard lattice of an iterated blow-up, with the curve class carried along.
/// Basis: base classes first, then one (−1)-coordinate per real center and
/// two per conjugate pair, in blow-up order.
#[derive(Clone, Debug, PartialEq)]
pub struct PicLattice {
    pub base: BaseSurface,
    pub centers: Vec<Center>,
    pub curve: Vec<Q>,
}

impl PicLattice {
    pub fn new(base: BaseSurface, curve_on_base: &[i64]) -> Result<Self, LatticeError> {
        if curve_on_base.len() != base.rank() {
            return Err(LatticeError::DimensionMismatch {
                expected: base.rank(),
                got: curve_on_base.len(),
            });
        }
        Ok(PicLattice {
            base,
            centers: Vec::new(),
            curve: curve_on_base.iter().map(|&c| q(c)).collect(),
        })
    }

    pub fn with_class(
        base: BaseSurface,
        centers: Vec<Center>,
        curve: Vec<Q>,
    ) -> Result<Self, LatticeError> {
        let rank = base.rank() + centers.iter().map(Center::dims).sum::<usize>();
        if curve.len() != rank {
            return Err(LatticeError::DimensionMismatch { expected: rank, got: curve.len() });
        }
        Ok(PicLattice { base, centers, curve })
    }

    pub fn rank(&self) -> usize {
        self.base.rank() + self.centers.iter().map(Center::dims).sum::<usize>()
    }

    /// First coordinate of center `idx`.
    fn center_offset(&self, idx: usize) -> usize {
        self.base.rank() + self.centers[..idx].iter().map(Center::dims).sum::<usize>()
    }

    fn check_len(&self, class: &[Q]) -> Result<(), LatticeError> {
        if class.len() != self.rank() {
            return Err(LatticeError::DimensionMismatch { expected: self.rank(), got: class.len() });
        }
        Ok(())
    }

    /// Intersection pairing: base gram block, then −1 per exceptional coord.
    pub fn intersect(&self, a: &[Q], b: &[Q]) -> Result<Q, LatticeError> {
        self.check_len(a)?;
        self.check_len(b)?;
        let r = self.base.rank();
        let gram = self.base.gram();
        let mut total = Q::zero();
        for i in 0..r {
            for j in 0..r {
                total += a[i] * b[j] * q(gram[i][j]);
            }
        }
        for i in r..self.rank() {
            total -= a[i] * b[i];
        }
        Ok(total)
    }

    pub fn self_int(&self, a: &[Q]) -> Result<Q, LatticeError> {
        self.intersect(a, a)
    }

    /// Canonical class in the current basis.
    pub fn k_class(&self) -> Vec<Q> {
        let mut k: Vec<Q> = self.base.k_coords().into_iter().map(q).collect();
        for c in &self.centers {
            for _ in 0..c.dims() {
                k.push(q(1));
            }
        }
        k
    }

    pub fn curve_self_int(&self) -> Q {
        self.self_int(&self.curve).expect("curve class has lattice rank")
    }

    /// Blow up one more center. On-curve centers subtract the exceptional
    /// class from the strict transform (smooth points, multiplicity one).
    pub fn blow_up(&mut self, center: Center) {
        let coeff = if center.on_curve() { q(-1) } else { q(0) };
        for _ in 0..center.dims() {
            self.curve.push(coeff);
        }
        self.centers.push(center);
    }

    /// Contract center `idx`: drop its coordinates (push-forward of classes).
    pub fn contract(&mut self, idx: usize) -> Result<Center, LatticeError> {
        if idx >= self.centers.len() {
            return Err(LatticeError::DomainError(format!("no center {idx}")));
        }
        let off = self.center_offset(idx);
        let center = self.centers.remove(idx);
        for _ in 0..center.dims() {
            self.curve.remove(off);
        }
        Ok(center)
    }

    /// p_a = (C² + C·K)/2 + 1 for an integral class.
    pub fn arithmetic_genus(&self, class: &[Q]) -> Result<i64, LatticeError> {
        self.check_len(class)?;
        if class.iter().any(|c| !c.is_integer()) {
            return Err(LatticeError::NonIntegralClass);
        }
        let pairing = self.self_int(class)? + self.intersect(class, &self.k_class())?;
        debug_assert!(pairing.is_integer() && pairing.numer() % 2 == 0);
        Ok(pairing.to_integer() / 2 + 1)
    }

    /// Real point set: the base form plus one crosscap per real blow-up
    /// (conjugate pairs never touch the real locus).
    pub fn real_topology(&self) -> ClosedSurface {
        let mut s = self.base.real_topology();
        for c in &self.centers {
            if matches!(c, Center::Real { .. }) {
                s = surface_sum(s, RP2);
            }
        }
        s
    }

    /// Action of the anti-holomorphic involution on a class: the quadric's
    /// rulings swap, every conjugate-pair block swaps, everything else is
    /// fixed.
    pub fn conjugate(&self, class: &[Q]) -> Result<Vec<Q>, LatticeError> {
        self.check_len(class)?;
        let mut out = class.to_vec();
        if self.base == BaseSurface::Quadric {
            out.swap(0, 1);
        }
        let mut off = self.base.rank();
        for c in &self.centers {
            if let Center::ConjPair { .. } = c {
                out.swap(off, off + 1);
            }
            off += c.dims();
        }
        Ok(out)
    }

    pub fn is_conjugation_invariant(&self, class: &[Q]) -> Result<bool, LatticeError> {
        Ok(self.conjugate(class)? == class.to_vec())
    }
}

mod q_serde {
    use super::Q;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }
}

fn q_vec_string(v: &[Q]) -> Vec<String> {
    v.iter().map(|c| c.to_string()).collect()
}

// ---------------------------------------------------------------------------
// Named constructions.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CobleVerdict {
    /// K is a negative combination: anti-ample direction.
    AntiAmpleish,
    /// The curve coefficient kills the exceptional part exactly.
    Trivial,
    /// K has a positive exceptional component.
    Ample,
}

#[derive(Clone, Debug, Serialize)]
pub struct CobleReport {
    pub degree: u32,
    pub nodes: u32,
    pub curve_self_int: i64,
    #[serde(with = "q_serde")]
    pub k_coefficient: Q,
    pub verdict: CobleVerdict,
    pub genus: i64,
    pub identity_exact: bool,
}

/// Nodal rational plane curve of degree d with all (d−1)(d−2)/2 nodes blown
/// up (each node has multiplicity two on the curve). Decomposes K over ℚ as
/// K = −(3/d)·C + (1 − 6/d)·ΣE and reports the sign of the exceptional
/// coefficient.
pub fn coble_example(d: u32) -> Result<CobleReport, LatticeError> {
    if d < 3 {
        return Err(LatticeError::DomainError(format!(
            "degree {d} has no nodal model here (need d >= 3)"
        )));
    }
    let nodes = (d - 1) * (d - 2) / 2;
    let mut curve = vec![q(d as i64)];
    curve.extend((0..nodes).map(|_| q(-2)));
    let centers = vec![Center::Real { on_curve: true }; nodes as usize];
    let lat = PicLattice::with_class(BaseSurface::P2, centers, curve)?;

    let csq = lat.curve_self_int();
    debug_assert!(csq.is_integer());
    let k_coefficient = q(1) - q(6) / q(d as i64);
    let verdict = if k_coefficient.is_zero() {
        CobleVerdict::Trivial
    } else if k_coefficient.is_positive() {
        CobleVerdict::Ample
    } else {
        CobleVerdict::AntiAmpleish
    };

    // K + (3/d)·C − (1 − 6/d)·ΣE must vanish identically over ℚ.
    let k = lat.k_class();
    let three_over_d = q(3) / q(d as i64);
    let mut residue = Vec::with_capacity(lat.rank());
    for (i, kc) in k.iter().enumerate() {
        let e_part = if i == 0 { Q::zero() } else { k_coefficient };
        residue.push(*kc + three_over_d * lat.curve[i] - e_part);
    }
    let identity_exact = residue.iter().all(Q::is_zero);

    let genus = lat.arithmetic_genus(&lat.curve)?;
    Ok(CobleReport {
        degree: d,
        nodes,
        curve_self_int: csq.to_integer(),
        k_coefficient,
        verdict,
        genus,
        identity_exact,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerNode {
    pub name: String,
    pub class: Vec<String>,
    pub self_int: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    pub r: u32,
    pub nodes: Vec<TowerNode>,
    /// Pairs of node indices with pairing exactly 1.
    pub adjacency: Vec<(usize, usize)>,
    pub single_cycle: bool,
    pub minus_one_nodes: Vec<usize>,
}

/// Tower of r infinitely-near real points over a point of a real line in the
/// plane: the dual graph of {E₁−E₂, …, E_{r−1}−E_r, E_r, H−ΣE, H, H−E₁} is a
/// single cycle of length r+3, with a unique (−1)-node once r ≥ 3.
pub fn tower_example(r: u32) -> Result<TowerReport, LatticeError> {
    if r < 1 {
        return Err(LatticeError::DomainError("tower needs at least one center".into()));
    }
    let r_us = r as usize;
    let centers = vec![Center::Real { on_curve: true }; r_us];
    let mut line = vec![q(1)];
    line.extend((0..r_us).map(|_| q(-1)));
    let lat = PicLattice::with_class(BaseSurface::P2, centers, line.clone())?;

    let unit = |i: usize| -> Vec<Q> {
        let mut v = vec![q(0); lat.rank()];
        v[i] = q(1);
        v
    };
    let mut nodes: Vec<(String, Vec<Q>)> = Vec::new();
    for i in 1..r_us {
        let mut v = vec![q(0); lat.rank()];
        v[i] = q(1);
        v[i + 1] = q(-1);
        nodes.push((format!("E{}-E{}", i, i + 1), v));
    }
    nodes.push((format!("E{r}"), unit(r_us)));
    nodes.push(("H-sumE".into(), line));
    nodes.push(("H".into(), unit(0)));
    let mut x = unit(0);
    x[1] = q(-1);
    nodes.push(("H-E1".into(), x));

    let n = nodes.len();
    let mut adjacency = Vec::new();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if lat.intersect(&nodes[i].1, &nodes[j].1)? == q(1) {
                adjacency.push((i, j));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    let single_cycle = adjacency.len() == n && degree.iter().all(|&d| d == 2) && {
        // Connectivity of the adjacency graph.
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(a, b) in &adjacency {
                let other = if a == i { b } else if b == i { a } else { continue };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.iter().all(|&s| s)
    };

    let mut report_nodes = Vec::new();
    let mut minus_one_nodes = Vec::new();
    for (i, (name, class)) in nodes.iter().enumerate() {
        let s = lat.self_int(class)?;
        debug_assert!(s.is_integer());
        let s = s.to_integer();
        if s == -1 {
            minus_one_nodes.push(i);
        }
        report_nodes.push(TowerNode { name: name.clone(), class: q_vec_string(class), self_int: s });
    }
    Ok(TowerReport { r, nodes: report_nodes, adjacency, single_cycle, minus_one_nodes })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    pub p_a: i64,
    pub forced: bool,
}

/// Bidegree (a₁, a₂) curve class on the torus form of P¹×P¹: the lattice
/// genus must equal (a₁−1)(a₂−1), and an even bidegree with odd genus forces
/// the parity obstruction.
pub fn p1xp1_parity_check(a1: i64, a2: i64) -> Result<ParityReport, LatticeError> {
    let lat = PicLattice::new(BaseSurface::P1xP1, &[a1, a2])?;
    let p_a = lat.arithmetic_genus(&lat.curve)?;
    let formula = (a1 - 1) * (a2 - 1);
    if p_a != formula {
        return Err(LatticeError::DomainError(format!(
            "lattice genus {p_a} disagrees with closed form {formula}"
        )));
    }
    Ok(ParityReport { p_a, forced: a1 % 2 == 0 && a2 % 2 == 0 && p_a % 2 != 0 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dp2Report {
    pub a: u32,
    pub self_pairing: i64,
    pub p_a: i64,
    pub forced: bool,
}

/// Degree-two del Pezzo: rank-one K-lattice with K² = 2 and C = −aK.
/// C·(C+K) = 2a(a−1) is always even, p_a = a(a−1)+1 always odd, so the
/// parity obstruction is forced for every a ≥ 1.
pub fn dp2_check(a: u32) -> Result<Dp2Report, LatticeError> {
    if a < 1 {
        return Err(LatticeError::DomainError("need a >= 1".into()));
    }
    let a = a as i64;
    let ksq = 2i64;
    let csq = a * a * ksq;
    let ck = -a * ksq;
    let self_pairing = csq + ck;
    let p_a = self_pairing / 2 + 1;
    Ok(Dp2Report { a: a as u32, self_pairing, p_a, forced: p_a % 2 != 0 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinusTwoReport {
    /// (a, b, d) with C = aK + bF, K² = d, C² = −2.
    pub raw: Vec<(i64, i64, i64)>,
    pub filtered: Vec<(i64, i64, i64)>,
    /// Rejected solutions with their C·(C+K) pairing.
    pub rejected: Vec<((i64, i64, i64), i64)>,
}

/// Solutions of C² = −2 for C = aK + bF in the lattice ⟨K, F⟩ with K² = d,
/// K·F = −2, F² = 0, over the search box a ≤ 0, 1 ≤ d ≤ 9, |4b| ≤ |ad| + 2.
/// Solutions whose C·(C+K) < −2 cannot be irreducible and are filtered out.
pub fn minus_two_solutions() -> MinusTwoReport {
    let mut raw = Vec::new();
    for d in 1..=9i64 {
        for a in -9..=0i64 {
            let bound = (a * d).abs() + 2;
            for b4 in -bound..=bound {
                if b4 % 4 != 0 {
                    continue;
                }
                let b = b4 / 4;
                if a * (a * d - 4 * b) == -2 {
                    raw.push((a, b, d));
                }
            }
        }
    }
    raw.sort_unstable();
    raw.dedup();
    let mut filtered = Vec::new();
    let mut rejected = Vec::new();
    for &(a, b, d) in &raw {
        let csq = -2;
        let ck = a * d - 2 * b;
        let pairing = csq + ck;
        // p_a ≥ 0 needs C·(C+K) ≥ −2.
        if pairing >= -2 {
            filtered.push((a, b, d));
        } else {
            rejected.push(((a, b, d), pairing));
        }
    }
    MinusTwoReport { raw, filtered, rejected }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairalg::ClosedSurface;
    use proptest::prelude::*;

    #[test]
    fn plane_curve_genus_grid() {
        let lat = PicLattice::new(BaseSurface::P2, &[1]).unwrap();
        for m in 1..=10i64 {
            let class = vec![q(m)];
            assert_eq!(lat.arithmetic_genus(&class).unwrap(), (m - 1) * (m - 2) / 2);
        }
    }

    #[test]
    fn base_k_squares() {
        for (base, ksq) in [
            (BaseSurface::P2, 9),
            (BaseSurface::Quadric, 8),
            (BaseSurface::P1xP1, 8),
            (BaseSurface::Hirzebruch(0), 8),
            (BaseSurface::Hirzebruch(5), 8),
        ] {
            let lat = PicLattice::new(base, &vec![0; base.rank()]).unwrap();
            assert_eq!(lat.self_int(&lat.k_class()).unwrap(), q(ksq));
        }
    }

    #[test]
    fn non_integral_class_is_rejected() {
        let lat = PicLattice::new(BaseSurface::P2, &[1]).unwrap();
        assert_eq!(
            lat.arithmetic_genus(&[Ratio::new(1, 2)]),
            Err(LatticeError::NonIntegralClass)
        );
        assert!(matches!(
            lat.arithmetic_genus(&[q(1), q(0)]),
            Err(LatticeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn real_topology_accumulates_crosscaps() {
        let mut lat = PicLattice::new(BaseSurface::Quadric, &[1, 1]).unwrap();
        assert_eq!(lat.real_topology(), ClosedSurface::orientable(0));
        lat.blow_up(Center::Real { on_curve: false });
        lat.blow_up(Center::Real { on_curve: true });
        lat.blow_up(Center::ConjPair { on_curve: true });
        assert_eq!(lat.real_topology(), ClosedSurface::non_orientable(2));
        assert_eq!(
            PicLattice::new(BaseSurface::Hirzebruch(3), &[0, 0]).unwrap().real_topology(),
            ClosedSurface::non_orientable(2)
        );
    }

    #[test]
    fn blow_up_tracks_strict_transform() {
        let mut lat = PicLattice::new(BaseSurface::P2, &[2]).unwrap();
        lat.blow_up(Center::Real { on_curve: true });
        lat.blow_up(Center::ConjPair { on_curve: true });
        lat.blow_up(Center::Real { on_curve: false });
        assert_eq!(lat.curve, vec![q(2), q(-1), q(-1), q(-1), q(0)]);
        // Conic through a real point and a conjugate pair: still rational.
        assert_eq!(lat.arithmetic_genus(&lat.curve).unwrap(), 0);
        assert_eq!(lat.curve_self_int(), q(1));
    }

    #[test]
    fn coble_family() {
        for d in 3..=9u32 {
            let rep = coble_example(d).unwrap();
            assert!(rep.identity_exact, "degree {d}");
            assert_eq!(rep.genus, 0, "degree {d}");
        }
        let d6 = coble_example(6).unwrap();
        assert_eq!((d6.curve_self_int, d6.k_coefficient, d6.verdict), (-4, q(0), CobleVerdict::Trivial));
        let d7 = coble_example(7).unwrap();
        assert_eq!(
            (d7.curve_self_int, d7.k_coefficient, d7.verdict),
            (-11, Ratio::new(1, 7), CobleVerdict::Ample)
        );
        let d3 = coble_example(3).unwrap();
        assert_eq!((d3.curve_self_int, d3.k_coefficient, d3.verdict), (5, q(-1), CobleVerdict::AntiAmpleish));
        assert!(coble_example(2).is_err());
    }

    #[test]
    fn tower_family() {
        let t3 = tower_example(3).unwrap();
        let squares: Vec<i64> = t3.nodes.iter().map(|n| n.self_int).collect();
        assert_eq!(squares, vec![-2, -2, -1, -2, 1, 0]);
        assert!(t3.single_cycle);
        assert_eq!(t3.minus_one_nodes.len(), 1);

        let t1 = tower_example(1).unwrap();
        let squares: Vec<i64> = t1.nodes.iter().map(|n| n.self_int).collect();
        assert_eq!(squares, vec![-1, 0, 1, 0]);
        assert!(t1.single_cycle);

        for r in 1..=6u32 {
            let t = tower_example(r).unwrap();
            assert_eq!(t.nodes.len(), (r + 3) as usize);
            assert!(t.single_cycle, "r = {r}");
            if r >= 3 {
                assert_eq!(t.minus_one_nodes.len(), 1, "r = {r}");
            }
        }
    }

    #[test]
    fn parity_checks() {
        assert_eq!(p1xp1_parity_check(4, 2).unwrap(), ParityReport { p_a: 3, forced: true });
        assert_eq!(p1xp1_parity_check(3, 2).unwrap(), ParityReport { p_a: 2, forced: false });
        assert_eq!(p1xp1_parity_check(2, 2).unwrap(), ParityReport { p_a: 1, forced: true });
        assert_eq!(
            dp2_check(2).unwrap(),
            Dp2Report { a: 2, self_pairing: 4, p_a: 3, forced: true }
        );
        for a in 1..=20u32 {
            assert!(dp2_check(a).unwrap().forced, "a = {a}");
        }
    }

    #[test]
    fn minus_two_classification() {
        let rep = minus_two_solutions();
        assert_eq!(rep.raw, vec![(-1, -2, 6), (-1, -1, 2)]);
        assert_eq!(rep.filtered, vec![(-1, -1, 2)]);
        assert_eq!(rep.rejected, vec![((-1, -2, 6), -4)]);
    }

    fn arb_base() -> impl Strategy<Value = BaseSurface> {
        prop_oneof![
            Just(BaseSurface::P2),
            Just(BaseSurface::Quadric),
            Just(BaseSurface::P1xP1),
            (0u32..5).prop_map(BaseSurface::Hirzebruch),
        ]
    }

    fn arb_center() -> impl Strategy<Value = Center> {
        prop_oneof![
            any::<bool>().prop_map(|on_curve| Center::Real { on_curve }),
            any::<bool>().prop_map(|on_curve| Center::ConjPair { on_curve }),
        ]
    }

    fn arb_lattice() -> impl Strategy<Value = PicLattice> {
        (arb_base(), proptest::collection::vec(arb_center(), 0..6)).prop_map(|(base, centers)| {
            let mut lat = PicLattice::new(base, &vec![1; base.rank()]).unwrap();
            for c in centers {
                lat.blow_up(c);
            }
            lat
        })
    }

    proptest! {
        #[test]
        fn k_is_characteristic(lat in arb_lattice(), coeffs in proptest::collection::vec(-5i64..=5, 0..12)) {
            let mut class: Vec<Q> = coeffs.into_iter().map(q).collect();
            class.resize(lat.rank(), q(0));
            let sq = lat.self_int(&class).unwrap();
            let ck = lat.intersect(&class, &lat.k_class()).unwrap();
            prop_assert_eq!((sq - ck).to_integer().rem_euclid(2), 0);
        }

        #[test]
        fn blow_up_contract_round_trip(lat in arb_lattice(), c in arb_center()) {
            let mut work = lat.clone();
            work.blow_up(c);
            let removed = work.contract(work.centers.len() - 1).unwrap();
            prop_assert_eq!(removed, c);
            prop_assert_eq!(work, lat);
        }

        #[test]
        fn k_square_drops_per_coordinate(lat in arb_lattice()) {
            let base_ksq = if lat.base == BaseSurface::P2 { 9 } else { 8 };
            let extra = (lat.rank() - lat.base.rank()) as i64;
            prop_assert_eq!(lat.self_int(&lat.k_class()).unwrap(), q(base_ksq - extra));
        }

        #[test]
        fn conjugation_is_an_isometric_involution(
            lat in arb_lattice(),
            a in proptest::collection::vec(-4i64..=4, 0..12),
            b in proptest::collection::vec(-4i64..=4, 0..12),
        ) {
            let pad = |coeffs: Vec<i64>| {
                let mut v: Vec<Q> = coeffs.into_iter().map(q).collect();
                v.resize(lat.rank(), q(0));
                v
            };
            let (a, b) = (pad(a), pad(b));
            let (sa, sb) = (lat.conjugate(&a).unwrap(), lat.conjugate(&b).unwrap());
            prop_assert_eq!(lat.conjugate(&sa).unwrap(), a.clone());
            prop_assert_eq!(lat.intersect(&sa, &sb).unwrap(), lat.intersect(&a, &b).unwrap());
            prop_assert_eq!(lat.conjugate(&lat.k_class()).unwrap(), lat.k_class());
        }
    }
}
