//! Simulation geometry.
//!
//! The hologram plane sits at `y = 0`, the scattering volume starts
//! `standoff_hologram` further along `y`, and the sensor plane sits
//! `standoff_sensor` past the far face of the volume. Both planes are normal
//! to `y` and centred on the `y` axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Point3, Result};

/// Relative tolerance for the declared hologram-to-sensor distance.
const DISTANCE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneConfig {
    pub extent_x: f64,
    pub extent_z: f64,
    pub nx: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumConfig {
    pub extent_x: f64,
    pub extent_z: f64,
    pub depth: f64,
    pub gx: usize,
    pub gy: usize,
    pub gz: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub standoff_hologram: f64,
    pub standoff_sensor: f64,
    /// Uniform positional jitter as a fraction of the grid cell, 0 disables it.
    #[serde(default)]
    pub jitter: f64,
}

/// Scene description as read from a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    pub hologram: PlaneConfig,
    pub sensor: PlaneConfig,
    pub medium: MediumConfig,
    /// Optional cross-check of the standoff and depth accounting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hologram_sensor_distance: Option<f64>,
}

fn default_wavelength() -> f64 {
    1.0
}

/// A uniformly pixelated plane normal to the `y` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub center: Point3,
    pub extent_x: f64,
    pub extent_z: f64,
    pub nx: usize,
    pub nz: usize,
}

impl PlaneSpec {
    pub fn pixel_count(&self) -> usize {
        self.nx * self.nz
    }

    pub fn pitch_x(&self) -> f64 {
        self.extent_x / self.nx as f64
    }

    pub fn pitch_z(&self) -> f64 {
        self.extent_z / self.nz as f64
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::InvalidGeometry(format!(
                "{name} plane needs at least one pixel per axis"
            )));
        }
        if !(positive(self.extent_x) && positive(self.extent_z)) {
            return Err(Error::InvalidGeometry(format!(
                "{name} plane extents must be positive"
            )));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGeometry(format!("{name} plane center")));
        }
        Ok(())
    }
}

/// Pixel centres of `plane`, row-major with x varying fastest.
pub fn sample_plane(plane: &PlaneSpec) -> Vec<Point3> {
    let (px, pz) = (plane.pitch_x(), plane.pitch_z());
    let [cx, cy, cz] = plane.center;
    let mut points = Vec::with_capacity(plane.pixel_count());
    for iz in 0..plane.nz {
        let z = cz + cell_center(iz, plane.nz, pz);
        for ix in 0..plane.nx {
            points.push([cx + cell_center(ix, plane.nx, px), cy, z]);
        }
    }
    points
}

/// Offset of cell `i` of `n` from the grid centre, for cells of width `pitch`.
fn cell_center(i: usize, n: usize, pitch: f64) -> f64 {
    (2.0 * i as f64 + 1.0 - n as f64) * 0.5 * pitch
}

/// The scattering volume: a box filled with a regular particle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub extent_x: f64,
    pub extent_z: f64,
    pub depth: f64,
    pub gx: usize,
    pub gy: usize,
    pub gz: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub standoff_hologram: f64,
    pub standoff_sensor: f64,
    pub jitter: f64,
}

impl MediumSpec {
    pub fn particle_count(&self) -> usize {
        self.gx * self.gy * self.gz
    }

    /// `(y_near, y_far)` faces of the box.
    pub fn y_range(&self) -> (f64, f64) {
        (self.standoff_hologram, self.standoff_hologram + self.depth)
    }

    pub fn cell(&self) -> [f64; 3] {
        [
            self.extent_x / self.gx as f64,
            self.depth / self.gy as f64,
            self.extent_z / self.gz as f64,
        ]
    }

    /// Particle sites at grid-cell centres; x fastest, then z, then y.
    pub fn grid_points(&self) -> Vec<Point3> {
        let [cx, cy, cz] = self.cell();
        let y_mid = self.standoff_hologram + 0.5 * self.depth;
        let mut points = Vec::with_capacity(self.particle_count());
        for iy in 0..self.gy {
            let y = y_mid + cell_center(iy, self.gy, cy);
            for iz in 0..self.gz {
                let z = cell_center(iz, self.gz, cz);
                for ix in 0..self.gx {
                    points.push([cell_center(ix, self.gx, cx), y, z]);
                }
            }
        }
        points
    }

    pub fn contains(&self, p: &Point3) -> bool {
        let (y0, y1) = self.y_range();
        p[0].abs() <= 0.5 * self.extent_x
            && p[2].abs() <= 0.5 * self.extent_z
            && p[1] >= y0
            && p[1] <= y1
    }

    fn validate(&self) -> Result<()> {
        if self.particle_count() == 0 {
            return Err(Error::InvalidGeometry(
                "medium grid needs at least one particle".into(),
            ));
        }
        if !(positive(self.extent_x) && positive(self.extent_z) && positive(self.depth)) {
            return Err(Error::InvalidGeometry(
                "medium extents must be positive".into(),
            ));
        }
        if !(self.tau_min.is_finite() && self.tau_max.is_finite()) || self.tau_min > self.tau_max {
            return Err(Error::InvalidGeometry(format!(
                "potential range [{}, {}] is empty",
                self.tau_min, self.tau_max
            )));
        }
        if !(positive(self.standoff_hologram) && positive(self.standoff_sensor)) {
            return Err(Error::InvalidGeometry(
                "standoffs must be positive so the planes stay outside the medium".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::InvalidGeometry(format!(
                "jitter {} outside [0, 1)",
                self.jitter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub hologram: PlaneSpec,
    pub sensor: PlaneSpec,
    pub medium: MediumSpec,
    pub wavelength: f64,
    pub wavenumber: f64,
}

impl Scene {
    /// Hologram pixel count `M`.
    pub fn hologram_pixels(&self) -> usize {
        self.hologram.pixel_count()
    }

    /// Sensor pixel count `N`.
    pub fn sensor_pixels(&self) -> usize {
        self.sensor.pixel_count()
    }

    pub fn hologram_sensor_distance(&self) -> f64 {
        self.sensor.center[1] - self.hologram.center[1]
    }

    pub fn hologram_points(&self) -> Vec<Point3> {
        sample_plane(&self.hologram)
    }

    pub fn sensor_points(&self) -> Vec<Point3> {
        sample_plane(&self.sensor)
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        let config: SceneConfig = serde_json::from_str(text)?;
        build_scene(&config)
    }
}

/// Validates `config` and lays out the planes and medium.
pub fn build_scene(config: &SceneConfig) -> Result<Scene> {
    if !positive(config.wavelength) {
        return Err(Error::InvalidGeometry("wavelength must be positive".into()));
    }
    let m = &config.medium;
    let medium = MediumSpec {
        extent_x: m.extent_x,
        extent_z: m.extent_z,
        depth: m.depth,
        gx: m.gx,
        gy: m.gy,
        gz: m.gz,
        tau_min: m.tau_min,
        tau_max: m.tau_max,
        standoff_hologram: m.standoff_hologram,
        standoff_sensor: m.standoff_sensor,
        jitter: m.jitter,
    };
    medium.validate()?;

    let distance = medium.standoff_hologram + medium.depth + medium.standoff_sensor;
    if let Some(declared) = config.hologram_sensor_distance {
        if !((declared - distance).abs() <= DISTANCE_RTOL * distance.max(declared.abs())) {
            return Err(Error::InvalidGeometry(format!(
                "declared hologram-sensor distance {declared} but standoffs and depth add up to {distance}"
            )));
        }
    }

    let plane = |p: &PlaneConfig, y: f64| PlaneSpec {
        center: [0.0, y, 0.0],
        extent_x: p.extent_x,
        extent_z: p.extent_z,
        nx: p.nx,
        nz: p.nz,
    };
    let hologram = plane(&config.hologram, 0.0);
    let sensor = plane(&config.sensor, distance);
    hologram.validate("hologram")?;
    sensor.validate("sensor")?;

    Ok(Scene {
        hologram,
        sensor,
        medium,
        wavelength: config.wavelength,
        wavenumber: 2.0 * PI / config.wavelength,
    })
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}
