//! Built-in grids and perturbations.

use crate::matpoly::MatrixPolynomial;
use crate::measures::{WeightGrid, WeightSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Side on which the perturbation multiplies the measure grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Right,
    Left,
}

/// Legendre: `q = p = 1`, `dx` on `[-1, 1]`.
pub fn f1_grid() -> WeightGrid {
    WeightGrid::new(1, 1, [-1.0, 1.0], vec![WeightSpec::lebesgue()]).expect("valid grid")
}

/// `x - 2`.
pub fn f1_perturbation() -> MatrixPolynomial {
    MatrixPolynomial::scalar(&[-2.0, 1.0]).expect("valid polynomial")
}

/// `q = 1`, `p = 3`: Lebesgue densities on the three thirds of `[-1, 1]`.
pub fn f2_grid() -> WeightGrid {
    let cuts = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0];
    let entries = (0..3)
        .map(|a| WeightSpec::density_on(vec![1.0], cuts[a], cuts[a + 1]))
        .collect();
    WeightGrid::new(1, 3, [-1.0, 1.0], entries).expect("valid grid")
}

/// `R(x) = R_1 x + R_0` with `R_1` the upper shift and
/// `R_0 = [[c, 0, 0], [0, c, 0], [1, b, c]]`, `c = b^2 / 4`.
/// `det R = (x - b^3 / 8)^2`.
pub fn f2_perturbation(b: f64) -> MatrixPolynomial {
    let c = b * b / 4.0;
    let r0 = DMatrix::from_row_slice(3, 3, &[c, 0.0, 0.0, 0.0, c, 0.0, 1.0, b, c]);
    let r1 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    MatrixPolynomial::new(vec![r0, r1]).expect("valid polynomial")
}

/// `q = 2`, `p = 1`: Lebesgue densities on `[-1, 0]` and `[0, 1]`.
pub fn f3_grid() -> WeightGrid {
    WeightGrid::new(
        2,
        1,
        [-1.0, 1.0],
        vec![
            WeightSpec::density_on(vec![1.0], -1.0, 0.0),
            WeightSpec::density_on(vec![1.0], 0.0, 1.0),
        ],
    )
    .expect("valid grid")
}

/// Left perturbation `L(x) = [[c, 1], [x, c]]`, `c = b^2 / 4`, with
/// `det L = c^2 - x`.
pub fn f3_perturbation(b: f64) -> MatrixPolynomial {
    let c = b * b / 4.0;
    let l0 = DMatrix::from_row_slice(2, 2, &[c, 1.0, 0.0, c]);
    let l1 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    MatrixPolynomial::new(vec![l0, l1]).expect("valid polynomial")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    F1,
    F2,
    F3,
}

/// A grid, a perturbation and the side it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: WeightGrid,
    pub perturbation: MatrixPolynomial,
    pub side: Side,
}

impl Fixture {
    pub fn problem(self, b: f64) -> Problem {
        match self {
            Fixture::F1 => Problem {
                grid: f1_grid(),
                perturbation: f1_perturbation(),
                side: Side::Right,
            },
            Fixture::F2 => Problem {
                grid: f2_grid(),
                perturbation: f2_perturbation(b),
                side: Side::Right,
            },
            Fixture::F3 => Problem {
                grid: f3_grid(),
                perturbation: f3_perturbation(b),
                side: Side::Left,
            },
        }
    }
}
