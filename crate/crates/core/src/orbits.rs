//! Walker-delta constellation geometry.
//!
//! Circular orbits around a spherical, uniformly rotating Earth. The epoch
//! convention is fixed: at `t = 0` the ascending node of plane 0 and the
//! Greenwich meridian both lie on the +x axis of the inertial frame.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarthModel {
    pub radius_km: f64,
    pub mu_km3s2: f64,
    pub rotation_rate_rad_s: f64,
}

impl Default for EarthModel {
    fn default() -> Self {
        Self {
            radius_km: 6371.0,
            mu_km3s2: 398_600.441_8,
            rotation_rate_rad_s: 7.292_115_9e-5,
        }
    }
}

impl EarthModel {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.radius_km, self.mu_km3s2, self.rotation_rate_rad_s]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::domain("earth model constants must be finite and positive"))
        }
    }

    /// Time for one full rotation relative to the inertial frame.
    pub fn sidereal_day_s(&self) -> f64 {
        2.0 * PI / self.rotation_rate_rad_s
    }
}

/// One Walker-delta shell: `num_planes` equally spaced planes with
/// `sats_per_plane` equally spaced satellites each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShellConfig {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub phasing_factor: usize,
}

impl Default for ShellConfig {
    /// Kuiper-like first shell.
    fn default() -> Self {
        Self {
            altitude_km: 630.0,
            inclination_deg: 51.9,
            num_planes: 34,
            sats_per_plane: 34,
            phasing_factor: 0,
        }
    }
}

impl ShellConfig {
    pub fn new(
        altitude_km: f64,
        inclination_deg: f64,
        num_planes: usize,
        sats_per_plane: usize,
        phasing_factor: usize,
    ) -> Result<Self> {
        let shell = Self {
            altitude_km,
            inclination_deg,
            num_planes,
            sats_per_plane,
            phasing_factor,
        };
        shell.validate()?;
        Ok(shell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km.is_finite() && self.altitude_km > 0.0) {
            return Err(Error::domain(format!(
                "altitude_km must be positive, got {}",
                self.altitude_km
            )));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(Error::domain(format!(
                "inclination_deg must lie in [0, 180], got {}",
                self.inclination_deg
            )));
        }
        if self.num_planes == 0 || self.sats_per_plane == 0 {
            return Err(Error::domain("num_planes and sats_per_plane must be at least 1"));
        }
        if self.phasing_factor >= self.num_planes {
            return Err(Error::domain(format!(
                "phasing_factor must lie in [0, {}), got {}",
                self.num_planes, self.phasing_factor
            )));
        }
        Ok(())
    }

    pub fn total_satellites(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn semi_major_axis_km(&self, earth: &EarthModel) -> f64 {
        earth.radius_km + self.altitude_km
    }

    /// Mean motion in rad/s.
    pub fn mean_motion(&self, earth: &EarthModel) -> f64 {
        let a = self.semi_major_axis_km(earth);
        (earth.mu_km3s2 / (a * a * a)).sqrt()
    }

    pub fn period_s(&self, earth: &EarthModel) -> f64 {
        2.0 * PI / self.mean_motion(earth)
    }

    /// All satellite ids in plane-major order.
    pub fn satellites(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        (0..self.num_planes)
            .flat_map(move |plane| (0..self.sats_per_plane).map(move |slot| SatelliteId { plane, slot }))
    }

    pub fn contains(&self, sat: SatelliteId) -> bool {
        sat.plane < self.num_planes && sat.slot < self.sats_per_plane
    }

    /// Dense index of a satellite (`plane * sats_per_plane + slot`).
    pub fn index_of(&self, sat: SatelliteId) -> usize {
        sat.plane * self.sats_per_plane + sat.slot
    }

    pub fn satellite_at(&self, index: usize) -> Option<SatelliteId> {
        (index < self.total_satellites()).then(|| SatelliteId {
            plane: index / self.sats_per_plane,
            slot: index % self.sats_per_plane,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SatelliteId {
    pub plane: usize,
    pub slot: usize,
}

impl SatelliteId {
    pub fn new(plane: usize, slot: usize) -> Self {
        Self { plane, slot }
    }
}

impl fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}S{}", self.plane, self.slot)
    }
}

fn default_min_elevation() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStation {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_deg: f64,
}

impl GroundStation {
    pub fn new(name: impl Into<String>, latitude_deg: f64, longitude_deg: f64) -> Self {
        Self {
            name: name.into(),
            latitude_deg,
            longitude_deg,
            min_elevation_deg: default_min_elevation(),
        }
    }

    pub fn with_min_elevation(mut self, min_elevation_deg: f64) -> Self {
        self.min_elevation_deg = min_elevation_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::domain(format!(
                "station {}: latitude_deg must lie in [-90, 90]",
                self.name
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::domain(format!(
                "station {}: longitude_deg must lie in [-180, 180]",
                self.name
            )));
        }
        if !(0.0..90.0).contains(&self.min_elevation_deg) {
            return Err(Error::domain(format!(
                "station {}: min_elevation_deg must lie in [0, 90)",
                self.name
            )));
        }
        Ok(())
    }
}

/// Earth-centered inertial coordinates in km.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x_km: f64,
    pub y_km: f64,
    pub z_km: f64,
}

impl Position {
    pub const fn new(x_km: f64, y_km: f64, z_km: f64) -> Self {
        Self { x_km, y_km, z_km }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Position) -> f64 {
        self.x_km * other.x_km + self.y_km * other.y_km + self.z_km * other.z_km
    }

    pub fn sub(&self, other: &Position) -> Position {
        Position::new(
            self.x_km - other.x_km,
            self.y_km - other.y_km,
            self.z_km - other.z_km,
        )
    }

    pub fn scale(&self, k: f64) -> Position {
        Position::new(self.x_km * k, self.y_km * k, self.z_km * k)
    }
}

/// Inertial position of `sat` at `t_s` seconds after epoch.
pub fn propagate(shell: &ShellConfig, sat: SatelliteId, t_s: f64, earth: &EarthModel) -> Result<Position> {
    if !shell.contains(sat) {
        return Err(Error::domain(format!(
            "satellite {sat} outside shell of {}x{}",
            shell.num_planes, shell.sats_per_plane
        )));
    }
    if !(t_s.is_finite() && t_s >= 0.0) {
        return Err(Error::domain(format!("time must be finite and non-negative, got {t_s}")));
    }
    let planes = shell.num_planes as f64;
    let slots = shell.sats_per_plane as f64;
    let radius = shell.semi_major_axis_km(earth);

    let raan = sat.plane as f64 * (2.0 * PI / planes);
    let phase = sat.plane as f64 * shell.phasing_factor as f64 * (2.0 * PI / (planes * slots));
    // Argument of latitude; reduce the time term first so long runs stay periodic.
    let motion = (shell.mean_motion(earth) * t_s).rem_euclid(2.0 * PI);
    let arg_lat = sat.slot as f64 * (2.0 * PI / slots) + phase + motion;

    let (sin_raan, cos_raan) = raan.sin_cos();
    let (sin_u, cos_u) = arg_lat.sin_cos();
    let (sin_i, cos_i) = shell.inclination_deg.to_radians().sin_cos();

    Ok(Position::new(
        radius * (cos_raan * cos_u - sin_raan * sin_u * cos_i),
        radius * (sin_raan * cos_u + cos_raan * sin_u * cos_i),
        radius * (sin_u * sin_i),
    ))
}

/// Inertial position of a ground station, rotating with the Earth.
pub fn ground_position(gs: &GroundStation, t_s: f64, earth: &EarthModel) -> Position {
    let lat = gs.latitude_deg.to_radians();
    let lon = gs.longitude_deg.to_radians() + earth.rotation_rate_rad_s * t_s;
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    Position::new(
        earth.radius_km * cos_lat * cos_lon,
        earth.radius_km * cos_lat * sin_lon,
        earth.radius_km * sin_lat,
    )
}

pub fn distance_km(a: &Position, b: &Position) -> f64 {
    a.sub(b).norm()
}

/// Elevation of `sat_pos` above the local horizon plane at `gs_pos`, in degrees.
pub fn elevation_deg(sat_pos: &Position, gs_pos: &Position) -> f64 {
    let line_of_sight = sat_pos.sub(gs_pos);
    let range = line_of_sight.norm();
    let up_norm = gs_pos.norm();
    if range == 0.0 || up_norm == 0.0 {
        return 90.0;
    }
    let sin_el = (line_of_sight.dot(gs_pos) / (range * up_norm)).clamp(-1.0, 1.0);
    sin_el.asin().to_degrees()
}

pub fn visible(sat_pos: &Position, gs: &GroundStation, gs_pos: &Position) -> bool {
    elevation_deg(sat_pos, gs_pos) >= gs.min_elevation_deg
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn desk_shell() -> ShellConfig {
        ShellConfig::new(630.0, 51.9, 6, 6, 0).unwrap()
    }

    #[test]
    fn zero_angle_lies_on_ascending_node_axis() {
        let earth = EarthModel::default();
        let p = propagate(&desk_shell(), SatelliteId::new(0, 0), 0.0, &earth).unwrap();
        assert!((p.x_km - 7001.0).abs() < 1e-9);
        assert!(p.y_km.abs() < 1e-9 && p.z_km.abs() < 1e-9);
    }

    #[test]
    fn period_matches_kepler() {
        let earth = EarthModel::default();
        let a: f64 = 7001.0;
        let oracle = 2.0 * PI * (a.powi(3) / 398_600.441_8).sqrt();
        let t = desk_shell().period_s(&earth);
        assert!(((t - oracle) / oracle).abs() < 1e-12);
        assert!((t - 5830.0).abs() < 5.0, "period {t}");
    }

    #[test]
    fn out_of_range_satellite_is_rejected() {
        let earth = EarthModel::default();
        let err = propagate(&desk_shell(), SatelliteId::new(6, 0), 0.0, &earth).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(propagate(&desk_shell(), SatelliteId::new(0, 0), -1.0, &earth).is_err());
    }

    #[test]
    fn shell_validation() {
        assert!(ShellConfig::new(-1.0, 50.0, 3, 3, 0).is_err());
        assert!(ShellConfig::new(500.0, 190.0, 3, 3, 0).is_err());
        assert!(ShellConfig::new(500.0, 50.0, 0, 3, 0).is_err());
        assert!(ShellConfig::new(500.0, 50.0, 3, 3, 3).is_err());
        assert!(ShellConfig::new(500.0, 50.0, 3, 3, 2).is_ok());
    }

    #[test]
    fn pole_is_rotation_invariant() {
        let earth = EarthModel::default();
        for t in [0.0, 1234.5, 86_000.0] {
            let p = ground_position(&GroundStation::new("n", 90.0, 42.0), t, &earth);
            assert!(p.x_km.abs() < 1e-9 && p.y_km.abs() < 1e-9);
            assert!((p.z_km - 6371.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_axis_alignment_and_half_day() {
        let earth = EarthModel::default();
        let gs = GroundStation::new("eq", 0.0, 0.0);
        let p = ground_position(&gs, 0.0, &earth);
        assert_eq!(p, Position::new(6371.0, 0.0, 0.0));
        let half = PI / earth.rotation_rate_rad_s;
        let q = ground_position(&gs, half, &earth);
        assert!(distance_km(&q, &Position::new(-6371.0, 0.0, 0.0)) < 1e-3);
    }

    #[test]
    fn distance_basics() {
        let o = Position::default();
        assert_eq!(distance_km(&o, &Position::new(3.0, 4.0, 0.0)), 5.0);
        let p = Position::new(1.5, -2.0, 7.0);
        assert_eq!(distance_km(&p, &p), 0.0);
    }

    #[test]
    fn elevation_zenith_and_horizon() {
        let gs = Position::new(6371.0, 0.0, 0.0);
        assert!((elevation_deg(&gs.scale(1.1), &gs) - 90.0).abs() < 1e-9);
        let horizon = Position::new(6371.0, 1000.0, 0.0);
        assert!(elevation_deg(&horizon, &gs).abs() < 1e-9);
    }

    #[test]
    fn elevation_matches_vector_oracle() {
        let sat = Position::new(7001.0, 0.0, 0.0);
        let ang = 10f64.to_radians();
        let gs = Position::new(6371.0 * ang.cos(), 6371.0 * ang.sin(), 0.0);
        // Zenith angle from the law of cosines, independent of the dot-product route.
        let d = ((7001.0f64).powi(2) + 6371.0f64.powi(2) - 2.0 * 7001.0 * 6371.0 * ang.cos()).sqrt();
        let cos_zenith = (7001.0f64.powi(2) - 6371.0f64.powi(2) - d * d) / (2.0 * 6371.0 * d);
        let oracle = 90.0 - cos_zenith.acos().to_degrees();
        let got = elevation_deg(&sat, &gs);
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        assert!((got - 23.302_832_627_6).abs() < 1e-9);
    }

    #[test]
    fn visibility_threshold_is_inclusive() {
        let gs = GroundStation::new("g", 0.0, 0.0);
        let gs_pos = Position::new(6371.0, 0.0, 0.0);
        assert!(visible(&gs_pos.scale(1.1), &gs, &gs_pos));
        assert!(!visible(&Position::new(6371.0, 500.0, 0.0), &gs, &gs_pos));
        // 45 degrees exactly: line of sight along (1, 1, 0) direction.
        let sat = Position::new(6371.0 + 800.0, 800.0, 0.0);
        let el = elevation_deg(&sat, &gs_pos);
        let at_threshold = gs.clone().with_min_elevation(el);
        assert!(visible(&sat, &at_threshold, &gs_pos));
    }

    #[test]
    fn in_plane_neighbours_are_equidistant() {
        let earth = EarthModel::default();
        let shell = desk_shell();
        for t in [0.0, 311.0, 4000.0] {
            for p in 0..shell.num_planes {
                let d0 = distance_km(
                    &propagate(&shell, SatelliteId::new(p, 0), t, &earth).unwrap(),
                    &propagate(&shell, SatelliteId::new(p, 1), t, &earth).unwrap(),
                );
                for s in 0..shell.sats_per_plane {
                    let a = propagate(&shell, SatelliteId::new(p, s), t, &earth).unwrap();
                    let b = propagate(&shell, SatelliteId::new(p, (s + 1) % 6), t, &earth).unwrap();
                    assert!((distance_km(&a, &b) - d0).abs() < 1e-6);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn radius_is_conserved(plane in 0usize..6, slot in 0usize..6, t in 0.0f64..1e6) {
            let earth = EarthModel::default();
            let p = propagate(&desk_shell(), SatelliteId::new(plane, slot), t, &earth).unwrap();
            prop_assert!(((p.norm() - 7001.0) / 7001.0).abs() < 1e-6);
        }

        #[test]
        fn orbit_is_periodic(plane in 0usize..6, slot in 0usize..6, t in 0.0f64..1e5) {
            let earth = EarthModel::default();
            let shell = desk_shell();
            let period = shell.period_s(&earth);
            let a = propagate(&shell, SatelliteId::new(plane, slot), t, &earth).unwrap();
            let b = propagate(&shell, SatelliteId::new(plane, slot), t + period, &earth).unwrap();
            prop_assert!(distance_km(&a, &b) < 1e-6);
        }

        #[test]
        fn elevation_is_bounded(
            sx in -1e4f64..1e4, sy in -1e4f64..1e4, sz in -1e4f64..1e4,
            lat in -90.0f64..90.0, lon in -180.0f64..180.0,
        ) {
            let gs = ground_position(&GroundStation::new("g", lat, lon), 0.0, &EarthModel::default());
            let el = elevation_deg(&Position::new(sx, sy, sz), &gs);
            prop_assert!((-90.0..=90.0).contains(&el));
        }

        #[test]
        fn distance_matches_component_arithmetic(
            a in proptest::array::uniform3(-1e4f64..1e4),
            b in proptest::array::uniform3(-1e4f64..1e4),
        ) {
            let pa = Position::new(a[0], a[1], a[2]);
            let pb = Position::new(b[0], b[1], b[2]);
            let oracle = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            prop_assert!((distance_km(&pa, &pb) - oracle).abs() <= 1e-9 * oracle.max(1.0));
            prop_assert_eq!(distance_km(&pa, &pb), distance_km(&pb, &pa));
        }
    }
}
