#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chaosrand::pendulum::{PendulumParams, PendulumState};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn rows(name: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(data(name))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("bad number {s:?}"))
}

pub struct SpecialCase {
    pub function: String,
    pub a: f64,
    pub x: f64,
    pub value: f64,
}

pub fn special_oracle() -> Vec<SpecialCase> {
    rows("special_oracle.csv")
        .into_iter()
        .map(|r| SpecialCase {
            function: r[0].clone(),
            a: num(&r[1]),
            x: num(&r[2]),
            value: num(&r[3]),
        })
        .collect()
}

pub struct AccelCase {
    pub state: PendulumState,
    pub params: PendulumParams,
    pub domega1: f64,
    pub domega2: f64,
}

pub fn accel_oracle() -> Vec<AccelCase> {
    rows("pendulum_accel_oracle.csv")
        .into_iter()
        .map(|r| {
            let v: Vec<f64> = r.iter().map(|s| num(s)).collect();
            AccelCase {
                state: PendulumState::new(v[0], v[1], v[2], v[3]).unwrap(),
                params: PendulumParams::new(v[4], v[5], v[6], v[7], v[8]).unwrap(),
                domega1: v[9],
                domega2: v[10],
            }
        })
        .collect()
}

/// State at t = 1 s from (2, 1, 0, 0) with unit masses and lengths.
pub fn reference_t1() -> [f64; 4] {
    let r = &rows("pendulum_reference_t1.csv")[0];
    [num(&r[0]), num(&r[1]), num(&r[2]), num(&r[3])]
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

pub fn hex_lines(name: &str) -> Vec<u64> {
    std::fs::read_to_string(data(name))
        .unwrap()
        .lines()
        .map(|l| u64::from_str_radix(l, 16).unwrap())
        .collect()
}
