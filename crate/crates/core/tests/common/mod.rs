//! Test-side oracles: brute-force optimum search and shared invariant checks.

#![allow(dead_code)]

pub mod props;

use std::f64::consts::PI;

pub const GRID_STEP_UM: f64 = 0.01;

fn shoelace(n: usize, r: f64) -> (f64, f64) {
    let v: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            (r * a.cos(), r * a.sin())
        })
        .collect();
    let mut area = 0.0;
    let mut per = 0.0;
    for k in 0..n {
        let (x0, y0) = v[k];
        let (x1, y1) = v[(k + 1) % n];
        area += x0 * y1 - x1 * y0;
        per += (x1 - x0).hypot(y1 - y0);
    }
    (0.5 * area.abs(), per)
}

fn grid(upto: f64) -> impl Iterator<Item = f64> {
    (1..).map(|k| k as f64 * GRID_STEP_UM).take_while(move |&x| x <= upto + 1e-9)
}

/// Best (w, l) on the grid with 2(w + l) ≤ budget.
pub fn rectangle(budget: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for w in grid(budget / 2.0) {
        for l in grid(budget / 2.0 - w) {
            let obj = w * l / (2.0 * (w + l));
            if obj > best.2 {
                best = (w, l, obj);
            }
        }
    }
    (best.0, best.1)
}

/// Best circumradius on the grid for an n-gon whose explicit perimeter fits the budget.
pub fn polygon(n: usize, budget: f64) -> f64 {
    let mut best = (0.0, f64::NEG_INFINITY);
    for r in grid(budget) {
        let (a, p) = shoelace(n, r);
        if p > budget + 1e-9 {
            break;
        }
        if a / p > best.1 {
            best = (r, a / p);
        }
    }
    best.0
}

/// Best circle radius on the grid with 2πr ≤ budget.
pub fn circle(budget: f64) -> f64 {
    grid(budget)
        .filter(|r| 2.0 * PI * r <= budget + 1e-9)
        .map(|r| (r, r / 2.0))
        .fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
        .0
}

/// Best (r_i, r_o) on the grid for an n-gon ring, outer perimeter within the budget.
pub fn ring(n: usize, budget: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for ro in grid(budget) {
        let (ao, p) = shoelace(n, ro);
        if p > budget + 1e-9 {
            break;
        }
        for ri in std::iter::once(0.0).chain(grid(ro - GRID_STEP_UM)) {
            let obj = (ao - shoelace(n, ri).0) / p;
            if obj > best.2 {
                best = (ri, ro, obj);
            }
        }
    }
    (best.0, best.1)
}
