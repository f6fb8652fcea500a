//! Lazily evaluated, memoized matrix-valued maps on `G` and on `G x G`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupHandle};
use crate::matrix::Mat;

pub type PairFn = dyn Fn(&GroupElement, &GroupElement) -> Result<Mat> + Send + Sync;
pub type ElementFn = dyn Fn(&GroupElement) -> Result<Mat> + Send + Sync;

type PairCache = RwLock<HashMap<(GroupElement, GroupElement), Mat>>;

/// A map `G x G -> M_d(R)` evaluated on demand.
///
/// Results are cached per argument pair. Evaluators are pure, so two threads
/// racing on the same key write the same value.
#[derive(Clone)]
pub struct PairMap {
    group: GroupHandle,
    dim: usize,
    eval: Arc<PairFn>,
    cache: Arc<PairCache>,
}

impl fmt::Debug for PairMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairMap").field("group", &self.group.kind_name()).field("dim", &self.dim).finish()
    }
}

impl PairMap {
    pub fn new<F>(group: GroupHandle, dim: usize, eval: F) -> Self
    where
        F: Fn(&GroupElement, &GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        PairMap { group, dim, eval: Arc::new(eval), cache: Arc::default() }
    }

    pub fn group(&self) -> &GroupHandle {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, g: &GroupElement, h: &GroupElement) -> Result<Mat> {
        let key = (g.clone(), h.clone());
        if let Some(m) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(m.clone());
        }
        self.group.check(g)?;
        self.group.check(h)?;
        let m = (self.eval)(g, h)?;
        if m.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: m.dim() });
        }
        if !m.is_finite() {
            return Err(Error::Divergence(format!("non-finite value at ({g}, {h})")));
        }
        self.cache.write().expect("cache lock").insert(key, m.clone());
        Ok(m)
    }
}

/// A map `G -> M_d(R)` evaluated on demand, with the same caching as [`PairMap`].
#[derive(Clone)]
pub struct ElementMap {
    group: GroupHandle,
    dim: usize,
    eval: Arc<ElementFn>,
    cache: Arc<RwLock<HashMap<GroupElement, Mat>>>,
}

impl fmt::Debug for ElementMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElementMap").field("group", &self.group.kind_name()).field("dim", &self.dim).finish()
    }
}

impl ElementMap {
    pub fn new<F>(group: GroupHandle, dim: usize, eval: F) -> Self
    where
        F: Fn(&GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        ElementMap { group, dim, eval: Arc::new(eval), cache: Arc::default() }
    }

    pub fn constant(group: GroupHandle, m: Mat) -> Self {
        let dim = m.dim();
        ElementMap::new(group, dim, move |_| Ok(m.clone()))
    }

    pub fn group(&self) -> &GroupHandle {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, g: &GroupElement) -> Result<Mat> {
        if let Some(m) = self.cache.read().expect("cache lock").get(g) {
            return Ok(m.clone());
        }
        self.group.check(g)?;
        let m = (self.eval)(g)?;
        if m.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: m.dim() });
        }
        if !m.is_finite() {
            return Err(Error::Divergence(format!("non-finite value at {g}")));
        }
        self.cache.write().expect("cache lock").insert(g.clone(), m.clone());
        Ok(m)
    }
}

/// Anything that evaluates like `W(g, h)` over a left translations groupoid.
pub trait MatrixCocycle {
    fn pair_map(&self) -> &PairMap;

    fn group(&self) -> &GroupHandle {
        self.pair_map().group()
    }

    fn dim(&self) -> usize {
        self.pair_map().dim()
    }

    fn at(&self, g: &GroupElement, h: &GroupElement) -> Result<Mat> {
        self.pair_map().at(g, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn memoizes_and_checks_membership() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let map = PairMap::new(GroupHandle::integers(), 1, move |_, h| {
            c.fetch_add(1, Ordering::SeqCst);
            Mat::new(1, vec![h.as_int().unwrap() as f64])
        });
        let (g, h) = (GroupElement::Int(2), GroupElement::Int(5));
        assert_eq!(map.at(&g, &h).unwrap().get(0, 0), 5.0);
        assert_eq!(map.at(&g, &h).unwrap().get(0, 0), 5.0);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert!(map.at(&GroupElement::Finite(0), &h).is_err());
    }

    #[test]
    fn rejects_wrong_dimension() {
        let map = ElementMap::new(GroupHandle::integers(), 2, |_| Ok(Mat::identity(3)));
        assert!(matches!(map.at(&GroupElement::Int(0)), Err(Error::DimMismatch { .. })));
    }
}
