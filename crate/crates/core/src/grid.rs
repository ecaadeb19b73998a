//! The hyperfinite unit interval `{ n/τ : 0 <= n <= τ }` and the rounding map
//! `κ(s) = [s/ε]·ε` onto it.

use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;

/// Resolution of a grid on `[0, 1]`; the step is `ε = 1/τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridSpec {
    tau: u64,
}

impl GridSpec {
    pub fn new(tau: u64) -> Result<Self> {
        if tau < 2 {
            return Err(Error::domain(format!(
                "grid resolution must be >= 2, got {tau}"
            )));
        }
        Ok(GridSpec { tau })
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn epsilon(&self) -> Rational {
        Rational::unit_fraction(self.tau)
    }

    /// Number of points, `τ + 1`.
    pub fn point_count(&self) -> u64 {
        self.tau + 1
    }

    pub fn point(&self, index: u64) -> Result<GridPoint> {
        if index > self.tau {
            return Err(Error::domain(format!(
                "index {index} is outside the grid 0..={}",
                self.tau
            )));
        }
        Ok(GridPoint { index, spec: *self })
    }

    pub fn origin(&self) -> GridPoint {
        GridPoint {
            index: 0,
            spec: *self,
        }
    }

    pub fn endpoint(&self) -> GridPoint {
        GridPoint {
            index: self.tau,
            spec: *self,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        let spec = *self;
        (0..=self.tau).map(move |index| GridPoint { index, spec })
    }

    /// `κ(s)`: the grid point with index `⌊s·τ⌋`, for `0 <= s <= 1`.
    pub fn round(&self, s: &Rational) -> Result<GridPoint> {
        if s.is_negative() || s > &Rational::one() {
            return Err(Error::domain(format!("cannot round {s} onto [0, 1]")));
        }
        let index = (s * Rational::from(self.tau))
            .floor()
            .to_u64()
            .expect("index of a point in [0, 1] fits the grid");
        Ok(GridPoint { index, spec: *self })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[0,1]_(1/{})", self.tau)
    }
}

/// A point `n/τ` of a grid. Only the index is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    index: u64,
    spec: GridSpec,
}

impl GridPoint {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// `n/τ`, exactly.
    pub fn value(&self) -> Rational {
        Rational::new(self.index, self.spec.tau).expect("tau is nonzero")
    }

    pub fn is_endpoint(&self) -> bool {
        self.index == self.spec.tau
    }

    /// `x⁺ = x + ε`; undefined at the right endpoint.
    pub fn successor(&self) -> Result<GridPoint> {
        if self.is_endpoint() {
            return Err(Error::domain(format!(
                "no successor at the right endpoint 1 of {}",
                self.spec
            )));
        }
        Ok(GridPoint {
            index: self.index + 1,
            spec: self.spec,
        })
    }

    pub fn predecessor(&self) -> Option<GridPoint> {
        (self.index > 0).then(|| GridPoint {
            index: self.index - 1,
            spec: self.spec,
        })
    }

    /// The point `offset` steps to the right, if it is still on the grid.
    pub fn offset(&self, steps: u64) -> Option<GridPoint> {
        let index = self.index.checked_add(steps)?;
        (index <= self.spec.tau).then_some(GridPoint {
            index,
            spec: self.spec,
        })
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.spec.tau)
    }
}

pub fn round_to_grid(s: &Rational, spec: GridSpec) -> Result<GridPoint> {
    spec.round(s)
}

/// The inclusion of grid points into the rationals.
pub fn embed(x: &GridPoint) -> Rational {
    x.value()
}

pub fn successor(x: &GridPoint) -> Result<GridPoint> {
    x.successor()
}

/// `s − κ(s)`, which lies in `[0, ε)`.
pub fn quasi_identity_defect(s: &Rational, spec: GridSpec) -> Result<Rational> {
    let rounded = spec.round(s)?;
    Ok(s - rounded.value())
}

/// The canonical equivalence between two grids: embed, then round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridMap {
    source: GridSpec,
    target: GridSpec,
}

impl GridMap {
    pub fn rounding(source: GridSpec, target: GridSpec) -> Self {
        GridMap { source, target }
    }

    pub fn source(&self) -> GridSpec {
        self.source
    }

    pub fn target(&self) -> GridSpec {
        self.target
    }

    /// The map in the other direction; an almost inverse of this one.
    pub fn reverse(&self) -> Self {
        GridMap {
            source: self.target,
            target: self.source,
        }
    }

    pub fn apply(&self, x: &GridPoint) -> Result<GridPoint> {
        if x.spec() != self.source {
            return Err(Error::domain(format!(
                "point {x} is not on the source grid {}",
                self.source
            )));
        }
        if self.source == self.target {
            return Ok(*x);
        }
        // ⌊n·τ_t / τ_s⌋ without building a rational
        let index =
            (x.index() as u128 * self.target.tau() as u128 / self.source.tau() as u128) as u64;
        Ok(GridPoint {
            index,
            spec: self.target,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn ten() -> GridSpec {
        GridSpec::new(10).unwrap()
    }

    #[test]
    fn spec_invariants() {
        assert!(GridSpec::new(1).is_err());
        let g = GridSpec::new(7).unwrap();
        assert_eq!(g.epsilon() * Rational::from(7), Rational::one());
        assert_eq!(g.point_count(), 8);
    }

    #[test]
    fn round_examples() {
        assert_eq!(round_to_grid(&r("37/100"), ten()).unwrap().index(), 3);
        assert_eq!(round_to_grid(&r("5/10"), ten()).unwrap().index(), 5);
        assert_eq!(round_to_grid(&r("1"), ten()).unwrap().index(), 10);
        assert!(round_to_grid(&r("-1/100"), ten()).is_err());
        assert!(round_to_grid(&r("101/100"), ten()).is_err());
    }

    #[test]
    fn embed_examples() {
        assert_eq!(embed(&ten().point(0).unwrap()), Rational::zero());
        assert_eq!(embed(&ten().point(7).unwrap()), r("7/10"));
        for x in ten().points() {
            assert_eq!(round_to_grid(&embed(&x), ten()).unwrap(), x);
        }
        assert!(ten().point(11).is_err());
    }

    #[test]
    fn successor_examples() {
        let g = ten();
        assert_eq!(successor(&g.point(3).unwrap()).unwrap().index(), 4);
        assert_eq!(successor(&g.point(9).unwrap()).unwrap().index(), 10);
        let err = successor(&g.point(10).unwrap()).unwrap_err();
        assert!(err.to_string().contains("right endpoint"));
    }

    #[test]
    fn defect_examples() {
        assert_eq!(
            quasi_identity_defect(&r("37/100"), ten()).unwrap(),
            r("7/100")
        );
        assert_eq!(
            quasi_identity_defect(&r("3/10"), ten()).unwrap(),
            Rational::zero()
        );
        let fine = GridSpec::new(1_000_000).unwrap();
        let d = quasi_identity_defect(&r("1/3"), fine).unwrap();
        assert_eq!(d, r("1/3000000"));
        assert!(d < fine.epsilon());
    }

    #[test]
    fn grid_maps_round_between_grids() {
        let a = GridSpec::new(10).unwrap();
        let b = GridSpec::new(4).unwrap();
        let ab = GridMap::rounding(a, b);
        // 7/10 -> floor(2.8) = 2 -> 2/4
        assert_eq!(ab.apply(&a.point(7).unwrap()).unwrap(), b.point(2).unwrap());
        for x in a.points() {
            let via_round = b.round(&x.value()).unwrap();
            assert_eq!(ab.apply(&x).unwrap(), via_round);
        }
        assert!(ab.apply(&b.point(1).unwrap()).is_err());
        let id = GridMap::rounding(a, a);
        assert_eq!(id.apply(&a.point(3).unwrap()).unwrap(), a.point(3).unwrap());
    }
}
