#![allow(dead_code)]

use kcontact::{presets, DerivativeMode, Grid, KContactStructure, TransverseGrid};

pub fn grid(n: usize, size: usize) -> Grid {
    TransverseGrid::new(n, size, DerivativeMode::Spectral).unwrap()
}

pub fn flat(n: usize, size: usize) -> KContactStructure {
    presets::heisenberg(&grid(n, size))
}

pub fn perturbed(size: usize) -> KContactStructure {
    presets::perturbed5(&grid(2, size), 0.05, 3, 1).unwrap()
}

pub fn product(size: usize) -> KContactStructure {
    presets::product5(&grid(2, size), 0.05, 3, 1).unwrap()
}

pub fn rel(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
