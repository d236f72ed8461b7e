//! Integer lattices of full rank in `Z^d`: Hermite normal form modulo a
//! known multiple of the determinant, and Smith normal form with the
//! column transform needed to coordinatize `Z^d / L`.

use num_integer::Integer;

pub type Row = Vec<i128>;

/// Full-rank sublattice of `Z^d`, stored as an upper-triangular HNF basis
/// (rows are basis vectors, diagonal entries positive, entries above the
/// diagonal reduced modulo the diagonal entry of their column).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub basis: Vec<Row>,
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let e = a.extended_gcd(&b);
    (e.gcd, e.x, e.y)
}

impl Lattice {
    /// Lattice generated by `gens` together with `modulus * Z^d`.
    ///
    /// `modulus` must be a multiple of the index of the lattice spanned by
    /// `gens` (or the caller must intend the sum with `modulus * Z^d`).
    pub fn from_generators_mod(dim: usize, gens: &[Row], modulus: i128) -> Self {
        assert!(modulus > 0);
        let mut rows: Vec<Row> = gens
            .iter()
            .map(|g| g.iter().map(|&a| a.rem_euclid(modulus)).collect())
            .collect();
        let mut basis = Vec::with_capacity(dim);
        for c in 0..dim {
            let mut extra = vec![0i128; dim];
            extra[c] = modulus;
            rows.push(extra);
            // fold every row with a nonzero entry in column c into a pivot
            let mut pivot: Option<Row> = None;
            let mut rest = Vec::with_capacity(rows.len());
            for r in rows.drain(..) {
                if r[c] == 0 {
                    rest.push(r);
                    continue;
                }
                match pivot.take() {
                    None => pivot = Some(r),
                    Some(p) => {
                        let (g, x, y) = ext_gcd(p[c], r[c]);
                        let (pa, ra) = (p[c] / g, r[c] / g);
                        let new_p: Row = (0..dim)
                            .map(|k| (x * p[k] + y * r[k]).rem_euclid(modulus))
                            .collect();
                        let mut new_r: Row = (0..dim)
                            .map(|k| (ra * p[k] - pa * r[k]).rem_euclid(modulus))
                            .collect();
                        new_r[c] = 0;
                        let mut new_p = new_p;
                        new_p[c] = g.abs();
                        if g < 0 {
                            for k in c + 1..dim {
                                new_p[k] = (-new_p[k]).rem_euclid(modulus);
                            }
                        }
                        rest.push(new_r);
                        pivot = Some(new_p);
                    }
                }
            }
            rows = rest;
            basis.push(pivot.expect("column always has the modulus row"));
        }
        for c in 0..dim {
            let h = basis[c][c];
            for r in 0..c {
                let f = basis[r][c].div_euclid(h);
                if f != 0 {
                    for k in c..dim {
                        basis[r][k] -= f * basis[c][k];
                    }
                }
            }
        }
        Self { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Index `[Z^d : L]`.
    pub fn index(&self) -> i128 {
        (0..self.dim()).map(|i| self.basis[i][i]).product()
    }

    pub fn contains(&self, v: &[i128]) -> bool {
        let mut v = v.to_vec();
        for c in 0..self.dim() {
            let h = self.basis[c][c];
            if v[c] % h != 0 {
                return false;
            }
            let f = v[c] / h;
            if f != 0 {
                for k in c..self.dim() {
                    v[k] -= f * self.basis[c][k];
                }
            }
        }
        true
    }

    /// True when `self ⊆ other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.basis.iter().all(|r| other.contains(r))
    }

    /// Canonical representative of `v` modulo the lattice.
    pub fn reduce(&self, v: &[i128]) -> Row {
        let mut v = v.to_vec();
        for c in 0..self.dim() {
            let h = self.basis[c][c];
            let f = v[c].div_euclid(h);
            if f != 0 {
                for k in c..self.dim() {
                    v[k] -= f * self.basis[c][k];
                }
            }
        }
        v
    }
}

/// Smith form data for `Z^d / L`: `x ↦ x·V` followed by reduction modulo
/// the invariant factors is an isomorphism onto `⊕ Z/s_i`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub invariants: Vec<i128>,
    pub v: Vec<Row>,
    pub v_inv: Vec<Row>,
}

fn col_op(m: &mut [Row], i: usize, j: usize, a: i128, b: i128, c: i128, d: i128) {
    // (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
    for row in m.iter_mut() {
        let (x, y) = (row[i], row[j]);
        row[i] = a * x + b * y;
        row[j] = c * x + d * y;
    }
}

fn row_op(m: &mut [Row], i: usize, j: usize, a: i128, b: i128, c: i128, d: i128) {
    let n = m[0].len();
    for k in 0..n {
        let (x, y) = (m[i][k], m[j][k]);
        m[i][k] = a * x + b * y;
        m[j][k] = c * x + d * y;
    }
}

// Column op (col_i, col_j) <- (p col_i + q col_j, r col_i + s col_j) with
// unit determinant; V is updated on the right and V^{-1} on the left.
fn apply_col(a: &mut [Row], v: &mut [Row], v_inv: &mut [Row], i: usize, j: usize, m: [i128; 4]) {
    let [p, q, r, s] = m;
    col_op(a, i, j, p, q, r, s);
    col_op(v, i, j, p, q, r, s);
    let det = p * s - q * r;
    debug_assert!(det == 1 || det == -1);
    row_op(v_inv, i, j, s * det, -r * det, -q * det, p * det);
}

/// Smith normal form of a square nonsingular integer matrix given by rows.
pub fn smith(rows: &[Row]) -> SmithForm {
    let n = rows.len();
    let mut a: Vec<Row> = rows.to_vec();
    let mut v: Vec<Row> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut v_inv = v.clone();

    for t in 0..n {
        loop {
            // choose smallest nonzero entry in the trailing block as pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if a[i][j] != 0
                        && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            if pi != t {
                a.swap(pi, t);
            }
            if pj != t {
                apply_col(&mut a, &mut v, &mut v_inv, t, pj, [0, 1, 1, 0]);
            }
            for i in t + 1..n {
                if a[i][t] != 0 {
                    let (g, x, y) = ext_gcd(a[t][t], a[i][t]);
                    let (u, w) = (a[t][t] / g, a[i][t] / g);
                    row_op(&mut a, t, i, x, y, -w, u);
                }
            }
            for j in t + 1..n {
                if a[t][j] != 0 {
                    let (g, x, y) = ext_gcd(a[t][t], a[t][j]);
                    let (u, w) = (a[t][t] / g, a[t][j] / g);
                    apply_col(&mut a, &mut v, &mut v_inv, t, j, [x, y, -w, u]);
                }
            }
            if (t + 1..n).any(|i| a[i][t] != 0) || (t + 1..n).any(|j| a[t][j] != 0) {
                continue;
            }
            // divisibility: pivot must divide the trailing block
            let p = a[t][t];
            let bad = (t + 1..n)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| a[i][j] % p != 0);
            match bad {
                None => break,
                Some((i, _)) => {
                    // add row i to row t and redo
                    row_op(&mut a, t, i, 1, 1, 0, 1);
                }
            }
        }
        if a[t][t] < 0 {
            for row in a.iter_mut() {
                row[t] = -row[t];
            }
            for row in v.iter_mut() {
                row[t] = -row[t];
            }
            for k in 0..n {
                v_inv[t][k] = -v_inv[t][k];
            }
        }
    }
    let invariants = (0..n).map(|i| a[i][i]).collect();
    SmithForm {
        invariants,
        v,
        v_inv,
    }
}
