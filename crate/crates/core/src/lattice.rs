// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Square-lattice geometry with spins living on the edges.
//!
//! Vertices are `(row, column)` pairs on a `width x length` grid. Edges are
//! indexed row-major: every horizontal edge `(r, c)-(r, c+1)` first, then every
//! vertical edge `(r, c)-(r+1, c)`. Each edge carries one qubit, so the qubit
//! index of an edge is its position in [`Lattice::edges`].
//!
//! Plaquettes are listed by their lower-left vertex and store their four edges
//! counterclockwise: bottom, right, top, left.

use serde::Serialize;

use crate::error::{QocError, Result};

/// Vertex coordinate `(row, column)`.
pub type Vertex = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub index: usize,
    /// Endpoints, smaller vertex first.
    pub ends: [Vertex; 2],
}

impl Edge {
    /// True for edges joining two vertices of the same row.
    pub fn is_horizontal(&self) -> bool {
        self.ends[0].0 == self.ends[1].0
    }

    pub fn shares_vertex(&self, other: &Edge) -> Option<Vertex> {
        self.ends
            .iter()
            .copied()
            .find(|v| other.ends.contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lattice {
    width: usize,
    length: usize,
    edges: Vec<Edge>,
    plaquettes: Vec<[usize; 4]>,
    corner_pairs: Vec<(usize, usize)>,
}

impl Lattice {
    /// Builds a `width x length` vertex grid. At least one edge is required.
    pub fn new(width: usize, length: usize) -> Result<Self> {
        if width == 0 || length == 0 {
            return Err(QocError::InvalidLattice {
                width,
                length,
                reason: "width and length must be positive",
            });
        }
        if width * length < 2 {
            return Err(QocError::InvalidLattice {
                width,
                length,
                reason: "a single vertex has no edges",
            });
        }

        let mut edges = Vec::with_capacity(width * (length - 1) + length * (width - 1));
        for r in 0..width {
            for c in 0..length - 1 {
                edges.push(Edge {
                    index: edges.len(),
                    ends: [(r, c), (r, c + 1)],
                });
            }
        }
        for r in 0..width - 1 {
            for c in 0..length {
                edges.push(Edge {
                    index: edges.len(),
                    ends: [(r, c), (r + 1, c)],
                });
            }
        }

        let horizontal = |r: usize, c: usize| r * (length - 1) + c;
        let vertical = |r: usize, c: usize| width * (length - 1) + r * length + c;

        let mut plaquettes = Vec::with_capacity((width - 1) * (length - 1));
        for r in 0..width - 1 {
            for c in 0..length - 1 {
                plaquettes.push([
                    horizontal(r, c),
                    vertical(r, c + 1),
                    horizontal(r + 1, c),
                    vertical(r, c),
                ]);
            }
        }

        // Every unordered pair of edges meeting at a vertex. Two distinct edges
        // share at most one vertex, so walking vertices cannot produce repeats.
        let mut corner_pairs = Vec::new();
        for r in 0..width {
            for c in 0..length {
                let incident: Vec<usize> = edges
                    .iter()
                    .filter(|e| e.ends.contains(&(r, c)))
                    .map(|e| e.index)
                    .collect();
                for (k, &a) in incident.iter().enumerate() {
                    for &b in &incident[k + 1..] {
                        corner_pairs.push((a.min(b), a.max(b)));
                    }
                }
            }
        }

        Ok(Self {
            width,
            length,
            edges,
            plaquettes,
            corner_pairs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Number of qubits, one per edge.
    pub fn qubits(&self) -> usize {
        self.edges.len()
    }

    /// Hilbert-space dimension `2^qubits`.
    pub fn dim(&self) -> usize {
        1 << self.qubits()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn plaquettes(&self) -> &[[usize; 4]] {
        &self.plaquettes
    }

    /// All unordered pairs of distinct edges incident to a common vertex.
    pub fn corner_pairs(&self) -> &[(usize, usize)] {
        &self.corner_pairs
    }

    /// Coupling graph of the transmon array. Qubits couple when their edges
    /// meet at a vertex, the only adjacency the edge layout defines.
    pub fn device_couplings(&self) -> &[(usize, usize)] {
        &self.corner_pairs
    }
}
