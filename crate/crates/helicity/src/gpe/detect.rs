//! Vortex-line extraction from phase windings on grid plaquettes.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use helicity_core::math::point_segment_distance_sq;
use helicity_core::{Filament, Vec3};

use super::{ComplexField3D, GpeError};

/// Nodes below which a traced line is dropped.
const MIN_LINE_NODES: usize = helicity_core::geometry::MIN_POINTS;

/// Integer phase winding of every grid plaquette. `w[a][n]` belongs to the
/// plaquette normal to axis `a` with lowest corner at node `n`, counted
/// counterclockwise about +`a`.
#[derive(Clone, Debug)]
pub struct Plaquettes {
    pub shape: [usize; 3],
    pub w: [Vec<i8>; 3],
}

impl Plaquettes {
    pub fn total_pierced(&self) -> usize {
        self.w.iter().map(|w| w.iter().map(|v| v.unsigned_abs() as usize).sum::<usize>()).sum()
    }
}

/// A traced line. `wraps` counts how many box lengths the line advances
/// along each axis before closing; it is zero for lines that close inside
/// the box rather than around the torus.
#[derive(Clone, Debug)]
pub struct VortexLine {
    pub filament: Filament,
    pub wraps: [i32; 3],
}

impl VortexLine {
    pub fn is_contractible(&self) -> bool {
        self.wraps == [0, 0, 0]
    }
}

struct Lattice {
    shape: [usize; 3],
}

impl Lattice {
    #[inline]
    fn coords(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.shape;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.shape[0] * (c[1] + self.shape[1] * c[2])
    }

    #[inline]
    fn shift(&self, idx: usize, axis: usize, by: isize) -> usize {
        let mut c = self.coords(idx);
        let n = self.shape[axis] as isize;
        c[axis] = (c[axis] as isize + by).rem_euclid(n) as usize;
        self.index(c)
    }
}

/// Nearest-branch phase differences along the three link directions.
fn link_phases(field: &ComplexField3D) -> [Vec<f64>; 3] {
    let lat = Lattice { shape: field.shape() };
    let psi = &field.data;
    [0, 1, 2].map(|a| {
        (0..psi.len()).into_par_iter().map(|idx| (psi[lat.shift(idx, a, 1)] * psi[idx].conj()).arg()).collect()
    })
}

pub fn plaquette_windings(field: &ComplexField3D) -> Plaquettes {
    let lat = Lattice { shape: field.shape() };
    let d = link_phases(field);
    let w = [0, 1, 2].map(|a| {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        (0..field.len())
            .into_par_iter()
            .map(|n| {
                let s = d[b][n] + d[c][lat.shift(n, b, 1)] - d[b][lat.shift(n, c, 1)] - d[c][n];
                (s / (2.0 * PI)).round() as i8
            })
            .collect()
    });
    Plaquettes { shape: field.shape(), w }
}

/// Zero of the bilinear interpolant of ψ on a unit square with corners
/// c00, c10, c11, c01, clamped to the square.
fn bilinear_zero(c00: Complex64, c10: Complex64, c11: Complex64, c01: Complex64) -> (f64, f64) {
    let (mut u, mut v) = (0.5, 0.5);
    for _ in 0..30 {
        let f = c00 * (1.0 - u) * (1.0 - v) + c10 * u * (1.0 - v) + c11 * u * v + c01 * (1.0 - u) * v;
        let fu = (c10 - c00) * (1.0 - v) + (c11 - c01) * v;
        let fv = (c01 - c00) * (1.0 - u) + (c11 - c10) * u;
        let det = fu.re * fv.im - fv.re * fu.im;
        if det.abs() < 1e-300 {
            break;
        }
        let du = -(f.re * fv.im - fv.re * f.im) / det;
        let dv = -(fu.re * f.im - f.re * fu.im) / det;
        u = (u + du).clamp(0.0, 1.0);
        v = (v + dv).clamp(0.0, 1.0);
        if du.abs() + dv.abs() < 1e-12 {
            break;
        }
    }
    (u, v)
}

struct Crossing {
    from: usize,
    to: usize,
    pos: Vec3,
}

fn min_image(d: Vec3, len: [f64; 3]) -> Vec3 {
    let w = |x: f64, l: f64| x - l * (x / l).round();
    Vec3::new(w(d.x, len[0]), w(d.y, len[1]), w(d.z, len[2]))
}

/// Connects pierced plaquettes into closed lines through the dual cubes.
/// Each line is oriented along its circulation, so every returned filament
/// carries Γ = +1. Nodes sit at the bilinear zero of ψ on each plaquette.
pub fn trace_vortex_lines(field: &ComplexField3D) -> Result<Vec<VortexLine>, GpeError> {
    let lat = Lattice { shape: field.shape() };
    let h = field.spacing();
    let len = field.box_lengths();
    let plaq = plaquette_windings(field);
    let psi = &field.data;

    let mut crossings = Vec::new();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for (n, w) in plaq.w[a].iter().enumerate() {
            if *w == 0 {
                continue;
            }
            let nb = lat.shift(n, b, 1);
            let nc = lat.shift(n, c, 1);
            let nbc = lat.shift(nb, c, 1);
            let (u, v) = bilinear_zero(psi[n], psi[nb], psi[nbc], psi[nc]);
            let [i, j, k] = lat.coords(n);
            let mut off = [0.0; 3];
            off[b] = u;
            off[c] = v;
            let pos = field.position(i, j, k) + Vec3::new(off[0], off[1], off[2]) * h;
            let below = lat.shift(n, a, -1);
            let (from, to) = if *w > 0 { (below, n) } else { (n, below) };
            for _ in 0..w.unsigned_abs() {
                crossings.push(Crossing { from, to, pos });
            }
        }
    }

    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (ci, c) in crossings.iter().enumerate() {
        outgoing.entry(c.from).or_default().push(ci);
    }

    let mut used = vec![false; crossings.len()];
    let mut lines = Vec::new();
    for start in 0..crossings.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut pts = vec![crossings[start].pos];
        let mut cube = crossings[start].to;
        while cube != crossings[start].from {
            let last = *pts.last().unwrap();
            let next = outgoing
                .get(&cube)
                .into_iter()
                .flatten()
                .copied()
                .filter(|ci| !used[*ci])
                .min_by(|x, y| {
                    let dx = min_image(crossings[*x].pos - last, len).norm_sq();
                    let dy = min_image(crossings[*y].pos - last, len).norm_sq();
                    dx.total_cmp(&dy)
                })
                .ok_or(GpeError::OpenLine { cube: lat.coords(cube) })?;
            used[next] = true;
            pts.push(last + min_image(crossings[next].pos - last, len));
            cube = crossings[next].to;
        }
        let first = pts[0];
        let last = *pts.last().unwrap();
        let closed = last + min_image(first - last, len);
        let gap = closed - first;
        let wraps = [0, 1, 2].map(|a| (gap[a] / len[a]).round() as i32);

        // Drop repeated nodes where two crossings share a clamped corner.
        let tol = 1e-9 * h;
        let mut clean: Vec<Vec3> = Vec::with_capacity(pts.len());
        for p in pts {
            if clean.last().map_or(true, |q: &Vec3| q.distance(p) > tol) {
                clean.push(p);
            }
        }
        while clean.len() > 1 && wraps == [0, 0, 0] && clean[0].distance(*clean.last().unwrap()) <= tol {
            clean.pop();
        }
        if clean.len() < MIN_LINE_NODES {
            log::warn!("discarding a traced vortex line of {} nodes", clean.len());
            continue;
        }

        // Put the line's centroid back inside the box.
        let centroid = clean.iter().fold(Vec3::ZERO, |s, p| s + *p) / clean.len() as f64;
        let centre = field.origin() + Vec3::new(len[0], len[1], len[2]) * 0.5;
        let shift = min_image(centroid - centre, len) - (centroid - centre);
        let id = lines.len() as i64;
        let filament = Filament::new(clean.iter().map(|p| *p + shift).collect(), 1.0, id)?;
        lines.push(VortexLine { filament, wraps });
    }
    Ok(lines)
}

/// Closed vortex lines of the field. Lines that wind around the periodic
/// box are skipped with a warning.
pub fn detect_vortex_lines(field: &ComplexField3D) -> Result<Vec<Filament>, GpeError> {
    let mut out = Vec::new();
    for line in trace_vortex_lines(field)? {
        if line.is_contractible() {
            out.push(line.filament.with_id(out.len() as i64));
        } else {
            log::warn!("skipping a vortex line that wraps the box {:?}", line.wraps);
        }
    }
    Ok(out)
}

fn polyline_distance_sq(x: Vec3, f: &Filament) -> f64 {
    (0..f.len()).map(|i| {
        let (a, b) = f.segment(i);
        point_segment_distance_sq(x, a, b)
    })
    .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two closed polylines, measured from
/// the nodes of each to the segments of the other.
pub fn hausdorff_distance(a: &Filament, b: &Filament) -> f64 {
    let one = |p: &Filament, q: &Filament| {
        p.points().par_iter().map(|x| polyline_distance_sq(*x, q)).reduce(|| 0.0, f64::max)
    };
    one(a, b).max(one(b, a)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_zero_recovers_linear_vortex() {
        // ψ = (x − 0.3) + i(y − 0.6) on the unit square.
        let f = |x: f64, y: f64| Complex64::new(x - 0.3, y - 0.6);
        let (u, v) = bilinear_zero(f(0.0, 0.0), f(1.0, 0.0), f(1.0, 1.0), f(0.0, 1.0));
        assert!((u - 0.3).abs() < 1e-12 && (v - 0.6).abs() < 1e-12);
    }

    #[test]
    fn vacuum_has_no_lines() {
        let f = ComplexField3D::cube(16, 0.5).unwrap();
        assert_eq!(plaquette_windings(&f).total_pierced(), 0);
        assert!(detect_vortex_lines(&f).unwrap().is_empty());
    }

    #[test]
    fn hausdorff_of_shifted_ring() {
        let a = helicity_core::make_circle(Vec3::ZERO, 3.0, Vec3::Z, 256).unwrap();
        let b = a.translated(Vec3::new(0.0, 0.0, 0.25));
        assert!((hausdorff_distance(&a, &b) - 0.25).abs() < 1e-12);
    }
}
