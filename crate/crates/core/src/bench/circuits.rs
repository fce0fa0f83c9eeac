// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Algorithm circuits used as end-to-end benchmarks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::circuit::{g, Circuit, Gate};

/// Largest register a benchmark may use.
pub const MAX_BENCH_QUBITS: usize = 5;
/// Largest adder width.
pub const MAX_ADDER_BITS: usize = 2;

/// Fixed QAOA angles; no classical optimisation loop is run.
pub const QAOA_GAMMA: f64 = 0.7;
pub const QAOA_BETA: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Bv,
    Qft,
    Qaoa,
    Cdkm,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [Benchmark::Bv, Benchmark::Qft, Benchmark::Qaoa, Benchmark::Cdkm];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Bv => "bv",
            Benchmark::Qft => "qft",
            Benchmark::Qaoa => "qaoa",
            Benchmark::Cdkm => "cdkm",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown benchmark '{s}' (expected bv|qft|qaoa|cdkm)"))
    }
}

fn too_big(what: &str, size: usize) -> BenchError {
    BenchError::Resource(format!("{what} of size {size}"))
}

/// Bernstein-Vazirani over `n` data qubits plus one ancilla (qubit `n`).
/// Reading the data qubits returns `hidden` with certainty.
pub fn bernstein_vazirani(n: usize, hidden: u64) -> Result<Circuit, BenchError> {
    if n == 0 || n + 1 > MAX_BENCH_QUBITS || hidden >> n != 0 {
        return Err(too_big("bv", n));
    }
    let mut c = Circuit::new(n + 1)?;
    c.extend([g::x(n), g::h(n)])?;
    c.extend((0..n).map(g::h))?;
    c.extend((0..n).filter(|i| hidden >> i & 1 == 1).map(|i| g::cx(i, n)))?;
    c.extend((0..n).map(g::h))?;
    c.extend((0..n).map(g::measure))?;
    Ok(c)
}

fn swap(a: usize, b: usize) -> [Gate; 3] {
    [g::cx(a, b), g::cx(b, a), g::cx(a, b)]
}

/// Quantum Fourier transform on `n` qubits, `|x> -> sum_k w^(xk) |k> / sqrt(N)`
/// with qubit 0 the least significant bit. Uses `n(n-1)/2` controlled phases
/// and a final bit reversal.
pub fn qft(n: usize) -> Result<Circuit, BenchError> {
    if n == 0 || n > MAX_BENCH_QUBITS {
        return Err(too_big("qft", n));
    }
    let mut c = Circuit::new(n)?;
    for j in (0..n).rev() {
        c.push(g::h(j))?;
        for k in (0..j).rev() {
            c.push(g::cphase(PI / (1u64 << (j - k)) as f64, j, k))?;
        }
    }
    for i in 0..n / 2 {
        c.extend(swap(i, n - 1 - i))?;
    }
    Ok(c)
}

/// Random bipartite graph on `n` vertices: qubits 0 and 1 sit on opposite
/// sides, every cross edge is kept with probability 0.6, and at least one
/// edge always exists.
pub fn bipartite_graph(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side: Vec<bool> = (0..n).map(|q| if q < 2 { q == 1 } else { rng.random_bool(0.5) }).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if side[a] != side[b] && rng.random_bool(0.6) {
                edges.push((a, b));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    edges
}

/// One QAOA MaxCut layer at fixed angles on a seeded bipartite graph.
pub fn qaoa(n: usize, seed: u64) -> Result<Circuit, BenchError> {
    if !(2..=MAX_BENCH_QUBITS).contains(&n) {
        return Err(too_big("qaoa", n));
    }
    let mut c = Circuit::new(n)?;
    c.extend((0..n).map(g::h))?;
    for (a, b) in bipartite_graph(n, seed) {
        c.push(g::rzz(2.0 * QAOA_GAMMA, a, b))?;
    }
    c.extend((0..n).map(|q| g::rx(2.0 * QAOA_BETA, q)))?;
    c.extend((0..n).map(g::measure))?;
    Ok(c)
}

/// Register of the ripple-carry adder: carry-in, interleaved `(b_i, a_i)`,
/// carry-out.
struct AdderLayout {
    bits: usize,
}

impl AdderLayout {
    fn cin(&self) -> usize {
        0
    }
    fn b(&self, i: usize) -> usize {
        1 + 2 * i
    }
    fn a(&self, i: usize) -> usize {
        2 + 2 * i
    }
    fn cout(&self) -> usize {
        2 * self.bits + 1
    }
}

fn maj(c: usize, b: usize, a: usize) -> [Gate; 3] {
    [g::cx(a, b), g::cx(a, c), g::ccx(c, b, a)]
}

fn uma(c: usize, b: usize, a: usize) -> [Gate; 3] {
    [g::ccx(c, b, a), g::cx(a, c), g::cx(c, b)]
}

/// CDKM ripple-carry adder computing `a + b` in place. Measures the sum
/// bits then the carry-out, so the outcome index is `a + b`.
pub fn cdkm_adder(bits: usize, a: u64, b: u64) -> Result<Circuit, BenchError> {
    if bits == 0 || bits > MAX_ADDER_BITS || a >> bits != 0 || b >> bits != 0 {
        return Err(too_big("cdkm", bits));
    }
    let l = AdderLayout { bits };
    let mut c = Circuit::new(2 * bits + 2)?;
    for i in 0..bits {
        if a >> i & 1 == 1 {
            c.push(g::x(l.a(i)))?;
        }
        if b >> i & 1 == 1 {
            c.push(g::x(l.b(i)))?;
        }
    }
    let carry = |i: usize| if i == 0 { l.cin() } else { l.a(i - 1) };
    for i in 0..bits {
        c.extend(maj(carry(i), l.b(i), l.a(i)))?;
    }
    c.push(g::cx(l.a(bits - 1), l.cout()))?;
    for i in (0..bits).rev() {
        c.extend(uma(carry(i), l.b(i), l.a(i)))?;
    }
    c.extend((0..bits).map(|i| g::measure(l.b(i))))?;
    c.push(g::measure(l.cout()))?;
    Ok(c)
}

/// Seeded benchmark instance of the given size: data bits for BV and the
/// adder, qubits for QFT and QAOA.
pub fn make_benchmark(kind: Benchmark, size: usize, seed: u64) -> Result<Circuit, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        Benchmark::Bv => {
            let hidden = rng.random_range(0..1u64 << size.min(63));
            bernstein_vazirani(size, hidden)
        }
        Benchmark::Qft => {
            let body = qft(size)?;
            // a two-term superposition input gives a non-uniform output
            let input: u64 = rng.random_range(0..1u64 << size);
            let mut c = Circuit::new(size)?;
            c.extend((1..size).filter(|i| input >> i & 1 == 1).map(g::x))?;
            c.push(g::h(0))?;
            c.append(&body)?;
            c.extend((0..size).map(g::measure))?;
            Ok(c)
        }
        Benchmark::Qaoa => qaoa(size, seed),
        Benchmark::Cdkm => {
            if size == 0 || size > MAX_ADDER_BITS {
                return Err(too_big("cdkm", size));
            }
            let a = rng.random_range(0..1u64 << size);
            let b = rng.random_range(0..1u64 << size);
            cdkm_adder(size, a, b)
        }
    }
}
