//! Shifted dyadic filtrations of `Rⁿ` and a dyadic Calderón–Zygmund
//! decomposition for finite discrete measures.
//!
//! The crate is organized bottom-up:
//!
//! * [`rational`] and [`geometry`]: exact scalars, points, half-open cubes, balls.
//! * [`grids`]: the `n + 1` diagonally shifted dyadic filtrations.
//! * [`covering`]: fit any ball into one cube of the family with side at most
//!   `2p` times the ball's circumscribed cube, and certify that `n`
//!   filtrations never suffice.
//! * [`measure`]: finite atomic measures, doubling cubes and their searches.
//! * [`czd`]: the maximal function, maximal heavy cubes and the decomposition
//!   `f = g + b`, with an exhaustive verifier.
//! * [`czo`]: truncated singular integrals and the empirical weak-(1,1) statistic.
//! * [`suite`]: the seeded acceptance battery shared by tests and the CLI.
//!
//! ```
//! use dyadic_cz::{covering, geometry::{Ball, Point}, grids::GridFamily, rational::Rational};
//!
//! let family = GridFamily::new(2).unwrap();
//! let center = Point::parse_list("1/2,1/2").unwrap();
//! let ball = Ball::new(center, Rational::ratio(1, 100)).unwrap();
//! let hit = covering::cover_ball(&family, &ball).unwrap();
//! assert_eq!(hit.cube.m, 1);
//! assert!(hit.side_ratio <= family.ratio_bound());
//! ```

pub mod covering;
pub mod czd;
pub mod czo;
pub mod error;
pub mod geometry;
pub mod grids;
pub mod measure;
pub mod rational;
pub mod suite;

pub use error::{Error, Result};
