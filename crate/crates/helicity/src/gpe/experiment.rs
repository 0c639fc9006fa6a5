//! Scenes and the stepping loop with periodic line extraction.

use serde::{Deserialize, Serialize};

use helicity_core::geometry::hopf_rings;
use helicity_core::topology::linking_number_polygon;
use helicity_core::{make_bundle, make_circle, Filament, Vec3};

use super::{detect::trace_vortex_lines, imprint_vortices, ComplexField3D, GpeConfig, GpeError, Stepper};

/// Initial vortex configurations. Lengths are in healing lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Scene {
    /// The linked ring pair, scaled to ring radius `radius`.
    HopfSingle { radius: f64 },
    /// One ring in the z = −radius plane, normal +z.
    Ring { radius: f64 },
    /// Two linked bundles: each ring of `HopfSingle` plus `satellites`
    /// parallel rings at distance `offset`.
    HopfBundles { radius: f64, satellites: usize, offset: f64 },
    /// Explicit filaments.
    Custom { filaments: Vec<Filament> },
}

impl Scene {
    /// Scene named `name` sized for a cubic box of edge `box_len`.
    pub fn named(name: &str, box_len: f64, spacing: f64) -> Result<Scene, GpeError> {
        Ok(match name {
            "hopf-single" => Scene::HopfSingle { radius: box_len / 4.0 },
            "ring" => Scene::Ring { radius: box_len / 6.0 },
            "hopf-bundles" => {
                let radius = box_len / 4.0;
                Scene::HopfBundles { radius, satellites: 2, offset: (4.0 * radius / 40.5).max(6.0 * spacing) }
            }
            other => return Err(GpeError::Scene(format!("unknown scene {other:?}"))),
        })
    }

    /// Filaments sampled with segments of about one grid spacing.
    pub fn filaments(&self, spacing: f64) -> Result<Vec<Filament>, GpeError> {
        let nodes = |r: f64| {
            let n = (2.0 * std::f64::consts::PI * r / spacing).ceil() as usize;
            n.max(64).next_multiple_of(2)
        };
        let mut out = match self {
            Scene::HopfSingle { radius } => hopf_rings(*radius, nodes(*radius))?.to_vec(),
            Scene::Ring { radius } => {
                vec![make_circle(Vec3::new(0.0, 0.0, -radius), *radius, Vec3::Z, nodes(*radius))?]
            }
            Scene::HopfBundles { radius, satellites, offset } => {
                let mut v = Vec::new();
                for ring in hopf_rings(*radius, nodes(*radius + *offset))? {
                    v.extend(make_bundle(&ring, *satellites, *offset)?);
                }
                v
            }
            Scene::Custom { filaments } => filaments.clone(),
        };
        for (i, f) in out.iter_mut().enumerate() {
            *f = f.clone().with_id(i as i64);
        }
        Ok(out)
    }
}

/// Diagnostics at one output time.
#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub total_length: f64,
    pub lk: Vec<Vec<i64>>,
    pub lk_sum: i64,
    pub filaments: Vec<Filament>,
}

/// Pairwise linking numbers of lines in a periodic box, each pair taken
/// with the nearest periodic image of the second line.
pub fn lk_matrix(lines: &[Filament], box_len: [f64; 3]) -> Vec<Vec<i64>> {
    let n = lines.len();
    let mut lk = vec![vec![0i64; n]; n];
    let centroids: Vec<Vec3> = lines.iter().map(|f| f.centroid()).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = centroids[j] - centroids[i];
            let w = |x: f64, l: f64| -l * (x / l).round();
            let shift = Vec3::new(w(d.x, box_len[0]), w(d.y, box_len[1]), w(d.z, box_len[2]));
            let l = linking_number_polygon(&lines[i], &lines[j].translated(shift)).rounded;
            lk[i][j] = l;
            lk[j][i] = l;
        }
    }
    lk
}

fn snapshot(step: usize, field: &ComplexField3D, stepper: &mut Stepper) -> Result<Snapshot, GpeError> {
    let lines = trace_vortex_lines(field)?;
    let total_length = lines.iter().map(|l| l.filament.polygon_length()).sum();
    let closed: Vec<Filament> = lines.into_iter().filter(|l| l.is_contractible()).map(|l| l.filament).collect();
    let lk = lk_matrix(&closed, field.box_lengths());
    let lk_sum = (0..closed.len()).flat_map(|i| ((i + 1)..closed.len()).map(move |j| (i, j))).map(|(i, j)| lk[i][j]).sum();
    Ok(Snapshot {
        step,
        t: field.time,
        norm: field.norm(),
        energy: stepper.energy(field),
        total_length,
        lk,
        lk_sum,
        filaments: closed,
    })
}

/// Imprints `scene` on a cubic grid and steps it to `config.t_end`,
/// extracting lines every `output_stride` steps and at the end. `observe`
/// sees each snapshot together with the field it was taken from.
pub fn run_experiment<F>(
    scene: &Scene,
    grid: usize,
    spacing: f64,
    config: &GpeConfig,
    mut observe: F,
) -> Result<Vec<Snapshot>, GpeError>
where
    F: FnMut(&Snapshot, &ComplexField3D),
{
    let mut field = ComplexField3D::cube(grid, spacing)?;
    imprint_vortices(&mut field, &scene.filaments(spacing)?, 1.0)?;
    let mut stepper = Stepper::new(&field, config)?;
    let steps = config.steps();
    let mut out = Vec::new();
    for s in 0..=steps {
        if s > 0 {
            stepper.step(&mut field)?;
        }
        if s % config.output_stride == 0 || s == steps {
            let snap = snapshot(s, &field, &mut stepper)?;
            log::info!(
                "t = {:.2}: {} lines, length {:.2}, lk sum {}",
                snap.t,
                snap.filaments.len(),
                snap.total_length,
                snap.lk_sum
            );
            observe(&snap, &field);
            out.push(snap);
        }
    }
    Ok(out)
}
