//! Bundled example masks.
//!
//! `fourpoint` is the interpolatory 4-point scheme, `vector2` a univariate scheme on pairs,
//! `bivariate` the three-direction box spline `(1+z_1)(1+z_2)(1+z_1 z_2)/8` and `divergent`
//! a bivariate mask that satisfies the sum rules but does not converge.

use crate::format::{parse_basis_json, parse_mask_json};
use crate::mask::{MatrixMask, VectorSequence};

pub const FOURPOINT: &str = include_str!("../data/fourpoint.json");
pub const VECTOR2: &str = include_str!("../data/vector2.json");
pub const VECTOR2_B1: &str = include_str!("../data/vector2_b1.json");
pub const BIVARIATE: &str = include_str!("../data/bivariate.json");
pub const BIVARIATE_B1: &str = include_str!("../data/bivariate_b1.json");
pub const BIVARIATE_BASIS: &str = include_str!("../data/bivariate_basis.json");
pub const DIVERGENT: &str = include_str!("../data/divergent.json");
pub const DIVERGENT_B1: &str = include_str!("../data/divergent_b1.json");

/// `(file name, contents)` for the four scheme masks.
pub const MASKS: [(&str, &str); 4] = [
    ("fourpoint.json", FOURPOINT),
    ("vector2.json", VECTOR2),
    ("bivariate.json", BIVARIATE),
    ("divergent.json", DIVERGENT),
];

fn load(text: &str) -> MatrixMask {
    parse_mask_json(text).expect("bundled mask is valid").mask
}

pub fn four_point() -> MatrixMask {
    load(FOURPOINT)
}

pub fn vector_example() -> MatrixMask {
    load(VECTOR2)
}

pub fn vector_example_b1() -> MatrixMask {
    load(VECTOR2_B1)
}

pub fn bivariate() -> MatrixMask {
    load(BIVARIATE)
}

pub fn bivariate_b1() -> MatrixMask {
    load(BIVARIATE_B1)
}

/// Hand-picked basis of `V_1` for [`bivariate`]: six first differences in `z_1`, two in `z_2`.
pub fn bivariate_basis() -> Vec<VectorSequence> {
    parse_basis_json(BIVARIATE_BASIS).expect("bundled basis is valid")
}

pub fn divergent() -> MatrixMask {
    load(DIVERGENT)
}

pub fn divergent_b1() -> MatrixMask {
    load(DIVERGENT_B1)
}
