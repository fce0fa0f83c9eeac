// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex linear algebra used by the unitary oracle and the
//! simulator.
//!
//! Qubit ordering is little-endian: qubit `i` is bit `i` of a basis index.
//! A `k`-qubit gate matrix is indexed with its *first* operand as the most
//! significant bit, so `CNOT` on `[control, target]` has the textbook matrix
//! permuting `|10>` and `|11>`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> Matrix {
    Matrix::identity(dim, dim)
}

pub fn from_rows(rows: &[&[C64]]) -> Matrix {
    let n = rows.len();
    Matrix::from_fn(n, n, |r, c| rows[r][c])
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// `exp(-i * angle/2 * P)` for a Pauli string matrix `P` (any `P` with `P^2 = I`).
pub fn pauli_rotation(pauli: &Matrix, angle: f64) -> Matrix {
    let dim = pauli.nrows();
    let (s, c) = (angle / 2.0).sin_cos();
    identity(dim).map(|z| z * c) - pauli.map(|z| z * I * s)
}

pub fn pauli_x() -> Matrix {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> Matrix {
    from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> Matrix {
    from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Distance between two matrices modulo a global phase.
///
/// The phase `λ` is chosen to align the largest-magnitude entry of `v` with
/// the matching entry of `u`; the result is `max |u - λ v|`.
pub fn phase_distance(u: &Matrix, v: &Matrix) -> f64 {
    assert_eq!(u.shape(), v.shape(), "shape mismatch");
    let (idx, pivot) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty matrix");
    if pivot.norm() == 0.0 {
        return max_abs_diff(u, v);
    }
    let ratio = u.as_slice()[idx] / pivot;
    let lambda = if ratio.norm() > 0.0 {
        ratio / ratio.norm()
    } else {
        ONE
    };
    u.iter()
        .zip(v.iter())
        .map(|(x, y)| (x - lambda * y).norm())
        .fold(0.0, f64::max)
}

pub fn is_unitary(u: &Matrix, tol: f64) -> bool {
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &identity(u.nrows())) < tol
}

/// Applies a `k`-qubit gate to a state vector over `n` qubits in place.
pub fn apply_gate(state: &mut [C64], gate: &Matrix, qubits: &[usize]) {
    let k = qubits.len();
    let dim = 1usize << k;
    debug_assert_eq!(gate.nrows(), dim);
    let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
    // offsets[local] = global bit pattern for local index (operand 0 is the MSB)
    let offsets: Vec<usize> = (0..dim)
        .map(|local| {
            qubits
                .iter()
                .enumerate()
                .filter(|(i, _)| local >> (k - 1 - i) & 1 == 1)
                .map(|(_, q)| 1usize << q)
                .sum()
        })
        .collect();
    let mut buf = vec![ZERO; dim];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for (slot, off) in buf.iter_mut().zip(&offsets) {
            *slot = state[base | off];
        }
        for (row, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (col, amp) in buf.iter().enumerate() {
                acc += gate[(row, col)] * amp;
            }
            state[base | off] = acc;
        }
    }
}

/// Embeds a gate acting on `qubits` into the full `2^n` space.
pub fn embed(gate: &Matrix, qubits: &[usize], n_qubits: usize) -> Matrix {
    let dim = 1usize << n_qubits;
    let mut out = identity(dim);
    for col in 0..dim {
        let mut column: Vec<C64> = out.column(col).iter().copied().collect();
        apply_gate(&mut column, gate, qubits);
        out.set_column(col, &nalgebra::DVector::from_vec(column));
    }
    out
}

/// `rho -> U rho U^dagger` for a gate acting on a subset of qubits.
pub fn conjugate_density(rho: &mut Matrix, gate: &Matrix, qubits: &[usize]) {
    let dim = rho.nrows();
    for col in 0..dim {
        let mut column: Vec<C64> = rho.column(col).iter().copied().collect();
        apply_gate(&mut column, gate, qubits);
        rho.set_column(col, &nalgebra::DVector::from_vec(column));
    }
    let mut adj = rho.adjoint();
    for col in 0..dim {
        let mut column: Vec<C64> = adj.column(col).iter().copied().collect();
        apply_gate(&mut column, gate, qubits);
        adj.set_column(col, &nalgebra::DVector::from_vec(column));
    }
    *rho = adj.adjoint();
}

/// Reduces an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn apply_gate_matches_embed_on_two_qubits() {
        let cnot = from_rows(&[
            &[ONE, ZERO, ZERO, ZERO],
            &[ZERO, ONE, ZERO, ZERO],
            &[ZERO, ZERO, ZERO, ONE],
            &[ZERO, ZERO, ONE, ZERO],
        ]);
        // control = qubit 0 (LSB), target = qubit 1: |01> (index 1) -> |11> (index 3)
        let full = embed(&cnot, &[0, 1], 2);
        assert_eq!(full[(3, 1)], ONE);
        assert_eq!(full[(1, 3)], ONE);
        assert_eq!(full[(0, 0)], ONE);
        assert_eq!(full[(2, 2)], ONE);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let x = pauli_x();
        let shifted = x.map(|z| z * C64::from_polar(1.0, 0.7));
        assert!(phase_distance(&x, &shifted) < 1e-15);
        assert!(phase_distance(&x, &pauli_z()) > 0.5);
    }

    #[test]
    fn normalize_angle_range() {
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn conjugation_preserves_trace() {
        let mut rho = identity(4).map(|z| z * 0.25);
        rho[(0, 3)] = C64::new(0.1, 0.0);
        rho[(3, 0)] = C64::new(0.1, 0.0);
        let h = pauli_rotation(&pauli_y(), PI / 3.0);
        conjugate_density(&mut rho, &h, &[1]);
        let tr: C64 = (0..4).map(|i| rho[(i, i)]).sum();
        assert!((tr - ONE).norm() < 1e-14);
    }
}
