//! Densities in a frame that moves only with drift and idiosyncratic noise.
//!
//! Node j of the grid sits at z_j = z0 + j·dz. A subtype's distance-to-default
//! is X = Z − β, so the absorbing boundary X = 0 is the point z = β. Common
//! noise and contagion move β; they never interpolate the density. The
//! density is the piecewise-linear function through the boundary knot (β, vb)
//! and the active nodes z_j >= β + dz/2; it is zero below β. Mass is the exact
//! integral of that function, so every loss is a difference of masses.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub z0: f64,
    pub dz: f64,
    pub len: usize,
}

impl ZGrid {
    /// Grid on [lo, hi] whose nodes include z = 0.
    pub fn covering(lo: f64, hi: f64, dz: f64) -> Self {
        let below = (-lo / dz).ceil().max(0.0) as usize;
        let above = (hi / dz).ceil().max(1.0) as usize;
        ZGrid { z0: -(below as f64) * dz, dz, len: below + above + 1 }
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z0 + j as f64 * self.dz
    }

    pub fn end(&self) -> f64 {
        self.z(self.len - 1)
    }

    /// First node with z_j >= beta + dz/2.
    pub fn first_active(&self, beta: f64) -> usize {
        let pos = ((beta - self.z0) / self.dz + 0.5).ceil();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.len)
        }
    }

    /// Index of the node at z = 0.
    pub fn origin(&self) -> usize {
        (-self.z0 / self.dz).round() as usize
    }
}

/// Density of one subtype (a type at one creditor-side quadrature node).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubDensity {
    pub values: Vec<f64>,
    pub beta: f64,
    /// Density at the boundary; positive only right after an upward move.
    pub vb: f64,
    /// Mass absorbed so far.
    pub lost: f64,
}

fn segment_area(x0: f64, y0: f64, x1: f64, y1: f64, lo: f64, hi: f64) -> f64 {
    let p = lo.max(x0);
    let q = hi.min(x1);
    if q <= p || x1 <= x0 {
        return 0.0;
    }
    let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    0.5 * (at(p) + at(q)) * (q - p)
}

impl SubDensity {
    /// Samples `pdf` at the nodes with the boundary at z = 0 and rescales so
    /// the represented function has unit mass.
    pub fn from_pdf(grid: &ZGrid, pdf: impl Fn(f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.len];
        let a = grid.first_active(0.0);
        for (j, v) in values.iter_mut().enumerate().skip(a) {
            *v = pdf(grid.z(j));
        }
        let mut d = SubDensity { values, beta: 0.0, vb: pdf(0.0), lost: 0.0 };
        if !d.vb.is_finite() {
            d.vb = 0.0;
        }
        let m = d.mass(grid);
        if m > 0.0 {
            d.values.iter_mut().for_each(|v| *v /= m);
            d.vb /= m;
        }
        d
    }

    pub fn zero(grid: &ZGrid) -> Self {
        SubDensity { values: vec![0.0; grid.len], beta: 0.0, vb: 0.0, lost: 0.0 }
    }

    pub fn first(&self, grid: &ZGrid) -> usize {
        grid.first_active(self.beta)
    }

    /// Value of the represented function at frame position `z`.
    pub fn value_at(&self, grid: &ZGrid, z: f64) -> f64 {
        if z < self.beta {
            return 0.0;
        }
        let a = self.first(grid);
        if a >= grid.len {
            return 0.0;
        }
        let za = grid.z(a);
        if z <= za {
            let h = za - self.beta;
            return if h <= 0.0 { self.values[a] } else { self.vb + (self.values[a] - self.vb) * (z - self.beta) / h };
        }
        let pos = (z - grid.z0) / grid.dz;
        let j = pos.floor() as usize;
        if j + 1 >= grid.len {
            return if j + 1 == grid.len { self.values[j] } else { 0.0 };
        }
        let f = pos - j as f64;
        (1.0 - f) * self.values[j] + f * self.values[j + 1]
    }

    /// Value at distance-to-default `x`.
    pub fn value_at_distance(&self, grid: &ZGrid, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.value_at(grid, self.beta + x)
        }
    }

    /// Integral over [lo, hi] in frame coordinates.
    pub fn integral(&self, grid: &ZGrid, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.beta);
        if hi <= lo {
            return 0.0;
        }
        let a = self.first(grid);
        if a >= grid.len {
            return 0.0;
        }
        let mut total = segment_area(self.beta, self.vb, grid.z(a), self.values[a], lo, hi);
        let start = if lo > grid.z(a) { (((lo - grid.z0) / grid.dz).floor() as usize).max(a) } else { a };
        for j in start..grid.len - 1 {
            let x0 = grid.z(j);
            if x0 >= hi {
                break;
            }
            total += segment_area(x0, self.values[j], grid.z(j + 1), self.values[j + 1], lo, hi);
        }
        total
    }

    pub fn mass(&self, grid: &ZGrid) -> f64 {
        let a = self.first(grid);
        if a >= grid.len {
            return 0.0;
        }
        let head = 0.5 * (self.vb + self.values[a]) * (grid.z(a) - self.beta);
        let body = &self.values[a..];
        let inner: f64 = body.iter().sum::<f64>() - 0.5 * (body[0] + body[body.len() - 1]);
        head + grid.dz * inner
    }

    /// Mass within `width` of the boundary.
    pub fn near_boundary(&self, grid: &ZGrid, width: f64) -> f64 {
        if width <= 0.0 {
            0.0
        } else {
            self.integral(grid, self.beta, self.beta + width)
        }
    }

    /// Moves the boundary up to `new_beta`; the mass passed over is absorbed
    /// and returned. The boundary value is chosen so the remaining mass is
    /// unchanged when nodes drop out of the active range; if that would make
    /// it negative, the first active node is rescaled instead.
    pub fn raise(&mut self, grid: &ZGrid, new_beta: f64) -> f64 {
        if new_beta <= self.beta {
            return 0.0;
        }
        let old_a = self.first(grid);
        let new_a = grid.first_active(new_beta);
        if new_a >= grid.len {
            let killed = self.mass(grid);
            self.values.iter_mut().for_each(|v| *v = 0.0);
            self.beta = new_beta;
            self.vb = 0.0;
            self.lost += killed;
            return killed;
        }
        let killed = self.near_boundary(grid, new_beta - self.beta);
        let za = grid.z(new_a);
        let keep = self.integral(grid, new_beta, za);
        let next = if new_a + 1 < grid.len { self.integral(grid, za, grid.z(new_a + 1)) } else { 0.0 };
        for v in &mut self.values[old_a.min(grid.len)..new_a] {
            *v = 0.0;
        }
        self.beta = new_beta;
        let h = za - new_beta;
        let vb = 2.0 * keep / h - self.values[new_a];
        if vb >= 0.0 {
            self.vb = vb;
        } else {
            self.vb = 0.0;
            self.values[new_a] = if new_a + 1 < grid.len {
                ((2.0 * (keep + next) - self.values[new_a + 1] * grid.dz) / (h + grid.dz)).max(0.0)
            } else {
                2.0 * keep / h
            };
        }
        self.lost += killed;
        killed
    }

    /// Moves the boundary down to `new_beta`, keeping the density zero on the
    /// uncovered stretch. The node just above the old boundary is rescaled so
    /// that the represented mass is unchanged.
    pub fn lower(&mut self, grid: &ZGrid, new_beta: f64) {
        if new_beta >= self.beta {
            return;
        }
        let old_beta = self.beta;
        let old_a = self.first(grid);
        let new_a = grid.first_active(new_beta);
        if old_a >= grid.len {
            self.beta = new_beta;
            self.vb = 0.0;
            return;
        }
        // First node strictly above the old boundary and the old mass up to
        // the node after it.
        let j1 = (new_a..grid.len).find(|&j| grid.z(j) > old_beta).unwrap_or(old_a);
        let right = (j1 + 1).min(grid.len - 1);
        let old_mass = self.integral(grid, old_beta, grid.z(right));
        for j in new_a..old_a {
            self.values[j] = self.value_at(grid, grid.z(j));
        }
        self.beta = new_beta;
        self.vb = 0.0;
        let prev = if j1 > new_a { grid.z(j1 - 1) } else { new_beta };
        let left_width = grid.z(j1) - prev;
        let y = if right > j1 {
            (2.0 * old_mass - self.values[right] * grid.dz) / (left_width + grid.dz)
        } else {
            2.0 * old_mass / left_width
        };
        self.values[j1] = y.max(0.0);
    }

    /// Explicit step of ∂ₜV = D ∂zz V − b ∂z V with V(β) = 0 and a reflecting
    /// right edge. The first active node uses the unequal spacing to β.
    /// Returns the absorbed mass.
    pub fn diffuse(&mut self, grid: &ZGrid, diff: f64, drift: f64, dt: f64, scratch: &mut Vec<f64>) -> f64 {
        let a = self.first(grid);
        if a >= grid.len {
            return 0.0;
        }
        let before = self.mass(grid);
        let dz = grid.dz;
        let n = grid.len;
        let (c_diff, c_adv) = (diff * dt, drift * dt);
        scratch.clear();
        scratch.extend_from_slice(&self.values);
        let u = &scratch[..];
        // Boundary node: unequal spacing h to the absorbing point.
        {
            let h = grid.z(a) - self.beta;
            let uj = u[a];
            let ur = if a + 1 < n { u[a + 1] } else { 0.0 };
            let second = 2.0 / (h + dz) * ((ur - uj) / dz - uj / h);
            let first = if drift > 0.0 { c_adv * uj / h } else { c_adv * (ur - uj) / dz };
            self.values[a] = (uj + c_diff * second - first).max(0.0);
        }
        let k2 = c_diff / (dz * dz);
        let k1 = c_adv / dz;
        for j in a + 1..n.saturating_sub(1) {
            let (ul, uj, ur) = (u[j - 1], u[j], u[j + 1]);
            let first = if drift > 0.0 { k1 * (uj - ul) } else { k1 * (ur - uj) };
            self.values[j] = (uj + k2 * (ur - 2.0 * uj + ul) - first).max(0.0);
        }
        if n - 1 > a {
            // Reflecting right edge.
            let j = n - 1;
            let (ul, uj) = (u[j - 1], u[j]);
            let first = if drift > 0.0 { k1 * (uj - ul) } else { 0.0 };
            self.values[j] = (uj + 2.0 * k2 * (ul - uj) - first).max(0.0);
        }
        self.vb = 0.0;
        let after = self.mass(grid);
        let mut lost = before - after;
        if lost < 0.0 {
            // The unequal boundary cell makes the stencil slightly
            // non-conservative; absorption cannot be negative, so the gain is
            // scaled away.
            let scale = before / after;
            self.values[a..].iter_mut().for_each(|v| *v *= scale);
            lost = 0.0;
        }
        self.lost += lost;
        lost
    }

    /// Mass in the last `cells` cells of the grid.
    pub fn tail_mass(&self, grid: &ZGrid, cells: usize) -> f64 {
        let lo = grid.z(grid.len.saturating_sub(cells + 1));
        self.integral(grid, lo, grid.end())
    }
}
