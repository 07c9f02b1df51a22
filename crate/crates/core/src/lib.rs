//! Exact toolkit for pairs (real rational surface, simple closed curve).
//!
//! The crate has two independent routes to the same topology — the symbolic
//! pair calculus in [`pairalg`] and the polygonal cut-complex oracle in
//! [`cellsurf`] — plus an exact Picard-lattice layer ([`piclattice`]), a
//! minimal-model step simulator ([`mmp`]), and the reachability enumeration
//! and approximability verdict ([`enumerate`]). The two routes share no
//! normalization code on purpose: every differential test between them is a
//! real check.

pub mod cellsurf;
pub mod enumerate;
pub mod mmp;
pub mod pairalg;
pub mod piclattice;

#[cfg(feature = "parallel")]
pub(crate) fn par_flat_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Vec<U> + Send + Sync,
{
    use rayon::prelude::*;
    items.into_par_iter().flat_map_iter(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_flat_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> Vec<U>,
{
    items.into_iter().flat_map(f).collect()
}
