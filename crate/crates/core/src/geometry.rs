//! Points, half-open axis-parallel cubes and Euclidean balls over exact rationals.
//!
//! Cubes are half-open, `∏ [lowerᵢ, lowerᵢ + side)`, so every generation of a
//! dyadic grid is an exact partition. A Euclidean ball lies in an
//! axis-parallel cube exactly when its circumscribed cube does, which keeps
//! square roots out of every containment test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<Rational>);

impl Point {
    pub fn new(coords: Vec<Rational>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![Rational::zero(); dim])
    }

    /// The point `(t, t, …, t)`.
    pub fn diagonal(dim: usize, t: Rational) -> Self {
        Point(vec![t; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    /// Parses `"a,b,c"` with each coordinate in rational text form.
    pub fn parse_list(text: &str) -> Result<Self> {
        text.split(',')
            .map(|s| s.parse::<Rational>())
            .collect::<Result<Vec<_>>>()
            .map(Point)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.dim() });
        }
        Ok(())
    }

    /// Sup-norm distance.
    pub fn dist_inf(&self, other: &Point) -> Rational {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Squared Euclidean distance (exact).
    pub fn dist2(&self, other: &Point) -> Rational {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = a - b;
                &d * &d
            })
            .sum()
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Half-open axis-parallel cube `∏ [lowerᵢ, lowerᵢ + side)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub lower: Point,
    pub side: Rational,
}

impl Cube {
    pub fn new(lower: Point, side: Rational) -> Result<Self> {
        if !side.is_positive() {
            return Err(Error::InvalidArgument(format!("cube side must be positive, got {side}")));
        }
        Ok(Cube { lower, side })
    }

    /// The cube with the given center and side.
    pub fn centered(center: &Point, side: Rational) -> Result<Self> {
        let half = side.half();
        let lower = Point(center.0.iter().map(|c| c - &half).collect());
        Cube::new(lower, side)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn center(&self) -> Point {
        let half = self.side.half();
        Point(self.lower.0.iter().map(|c| c + &half).collect())
    }

    pub fn upper(&self) -> Point {
        Point(self.lower.0.iter().map(|c| c + &self.side).collect())
    }

    /// Half-open membership: lower faces belong to the cube, upper faces don't.
    pub fn contains_point(&self, x: &Point) -> bool {
        self.lower.0.iter().zip(&x.0).all(|(lo, xi)| lo <= xi && *xi < lo + &self.side)
    }

    /// `inner ⊆ self` as half-open sets.
    pub fn contains_cube(&self, inner: &Cube) -> Result<bool> {
        if self.dim() != inner.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: inner.dim() });
        }
        Ok(self.contains_cube_unchecked(inner))
    }

    pub(crate) fn contains_cube_unchecked(&self, inner: &Cube) -> bool {
        self.lower.0.iter().zip(&inner.lower.0).all(|(lo, ilo)| {
            lo <= ilo && ilo + &inner.side <= lo + &self.side
        })
    }

    /// Whether the two half-open cubes share a point.
    pub fn intersects(&self, other: &Cube) -> bool {
        self.lower.0.iter().zip(&other.lower.0).all(|(a, b)| {
            a < &(b + &other.side) && b < &(a + &self.side)
        })
    }

    /// Concentric dilation by `factor >= 1`.
    pub fn dilate(&self, factor: &Rational) -> Result<Cube> {
        if *factor < 1 {
            return Err(Error::InvalidArgument(format!("dilation factor {factor} is below 1")));
        }
        Ok(self.scaled(factor))
    }

    /// Concentric scaling by any positive factor.
    pub(crate) fn scaled(&self, factor: &Rational) -> Cube {
        let side = &self.side * factor;
        // new lower = center − side'/2 = lower + side(1 − factor)/2
        let shift = (&self.side - &side).half();
        Cube {
            lower: Point(self.lower.0.iter().map(|c| c + &shift).collect()),
            side,
        }
    }

    /// The `2^n` corners.
    pub fn corners(&self) -> Vec<Point> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                Point(
                    self.lower
                        .0
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if mask >> i & 1 == 1 { c + &self.side } else { c.clone() })
                        .collect(),
                )
            })
            .collect()
    }
}

impl std::fmt::Display for Cube {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .lower
            .0
            .iter()
            .map(|lo| format!("[{lo}, {})", lo + &self.side))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: Rational,
}

impl Ball {
    pub fn new(center: Point, radius: Rational) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    /// The axis-parallel cube of side `2·radius` around the ball.
    pub fn circumscribed(&self) -> Cube {
        Cube::centered(&self.center, &self.radius + &self.radius).expect("radius is positive")
    }
}
