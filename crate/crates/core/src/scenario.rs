//! Two-cell collinear deployment: two gNBs, one cell-edge UE per cell and a
//! repeater placed between the second gNB and its UE.
//!
//! All nodes lie on the x-axis (y = 0), heights are carried in z:
//!
//! ```text
//!   B1 ---------- U1 ......... U2 ---- NCR ------ B2
//!   x=0          x=d          x=isd-d  x=isd-off  x=isd
//! ```

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidArgument {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    B1,
    B2,
    Ncr,
    U1,
    U2,
}

impl NodeId {
    pub const ALL: [NodeId; 5] = [NodeId::B1, NodeId::B2, NodeId::Ncr, NodeId::U1, NodeId::U2];

    pub fn is_gnb(self) -> bool {
        matches!(self, NodeId::B1 | NodeId::B2)
    }

    pub fn is_ue(self) -> bool {
        matches!(self, NodeId::U1 | NodeId::U2)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeId::B1 => "b1",
            NodeId::B2 => "b2",
            NodeId::Ncr => "ncr",
            NodeId::U1 => "u1",
            NodeId::U2 => "u2",
        };
        f.write_str(s)
    }
}

/// Cartesian position in meters; z is the antenna height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn midpoint(self, other: Point3) -> Point3 {
        Point3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }

    pub fn distance(self, other: Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(self, other: Point3) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// A propagation direction as global azimuth (radians, counter-clockwise from
/// +x) and elevation (radians, positive above the horizon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub const fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    /// Direction of the vector from `from` to `to`. Coincident points give
    /// the +x horizontal direction.
    pub fn between(from: Point3, to: Point3) -> Self {
        let (dx, dy, dz) = (to.x - from.x, to.y - from.y, to.z - from.z);
        let horizontal = dx.hypot(dy);
        if horizontal == 0.0 && dz == 0.0 {
            return Direction::new(0.0, 0.0);
        }
        Direction::new(dy.atan2(dx), dz.atan2(horizontal))
    }

    pub fn unit_vector(self) -> [f64; 3] {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [ce * ca, ce * sa, se]
    }

    pub fn is_finite(self) -> bool {
        self.azimuth.is_finite() && self.elevation.is_finite()
    }
}

/// Mechanical panel pointing: bearing (global azimuth of boresight) and
/// downtilt (positive points below the horizon), both in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelOrientation {
    pub bearing: f64,
    pub downtilt: f64,
}

impl PanelOrientation {
    pub const fn new(bearing: f64, downtilt: f64) -> Self {
        Self { bearing, downtilt }
    }

    pub fn toward(from: Point3, to: Point3) -> Self {
        let d = Direction::between(from, to);
        Self::new(d.azimuth, -d.elevation)
    }

    pub fn boresight(self) -> Direction {
        Direction::new(self.bearing, -self.downtilt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PanelId {
    B1,
    B2,
    NcrBackhaul,
    NcrAccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeDescriptor {
    pub id: NodeId,
    pub position: Point3,
}

pub fn distance_3d(a: &NodeDescriptor, b: &NodeDescriptor) -> f64 {
    a.position.distance(b.position)
}

/// Heights and panel settings that shape the layout beyond the three
/// placement distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub isd: f64,
    pub gnb_ue_distance: f64,
    pub ncr_offset: f64,
    pub gnb_height: f64,
    pub ncr_height: f64,
    pub ue_height: f64,
    /// Mechanical downtilt of the repeater access panel, radians. The panel
    /// bearing always faces U2; elevation steering is left to the codebook.
    pub ncr_access_downtilt: f64,
    /// Accept offsets outside `(0, gnb_ue_distance)` and UE distances beyond
    /// half the ISD.
    pub allow_override: bool,
}

impl LayoutParams {
    pub fn new(isd: f64, gnb_ue_distance: f64, ncr_offset: f64) -> Self {
        Self {
            isd,
            gnb_ue_distance,
            ncr_offset,
            gnb_height: 25.0,
            ncr_height: 10.0,
            ue_height: 1.5,
            ncr_access_downtilt: 0.0,
            allow_override: false,
        }
    }

    pub fn with_override(mut self, allow: bool) -> Self {
        self.allow_override = allow;
        self
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [
            ("isd", self.isd),
            ("gnb_ue_distance", self.gnb_ue_distance),
            ("ncr_offset", self.ncr_offset),
            ("gnb_height", self.gnb_height),
            ("ncr_height", self.ncr_height),
            ("ue_height", self.ue_height),
            ("ncr_access_downtilt", self.ncr_access_downtilt),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if self.isd <= 0.0 {
            return Err(invalid(
                "isd",
                format!("must be positive, got {}", self.isd),
            ));
        }
        if self.gnb_ue_distance <= 0.0 {
            return Err(invalid(
                "gnb_ue_distance",
                format!("must be positive, got {}", self.gnb_ue_distance),
            ));
        }
        for (field, h) in [
            ("gnb_height", self.gnb_height),
            ("ncr_height", self.ncr_height),
            ("ue_height", self.ue_height),
        ] {
            if h <= 0.0 {
                return Err(invalid(field, format!("must be positive, got {h}")));
            }
        }
        if self.allow_override {
            return Ok(());
        }
        if self.gnb_ue_distance > self.isd / 2.0 {
            return Err(invalid(
                "gnb_ue_distance",
                format!(
                    "{} exceeds half the ISD ({}); set the override flag to allow",
                    self.gnb_ue_distance,
                    self.isd / 2.0
                ),
            ));
        }
        if !(self.ncr_offset > 0.0 && self.ncr_offset < self.gnb_ue_distance) {
            return Err(invalid(
                "ncr_offset",
                format!(
                    "{} outside (0, {}); set the override flag to allow",
                    self.ncr_offset, self.gnb_ue_distance
                ),
            ));
        }
        Ok(())
    }
}

/// Node positions and panel orientations for one repeater placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLayout {
    nodes: [NodeDescriptor; 5],
    pub isd: f64,
    pub gnb_ue_distance: f64,
    pub ncr_offset: f64,
    b1_panel: PanelOrientation,
    b2_panel: PanelOrientation,
    ncr_backhaul_panel: PanelOrientation,
    ncr_access_panel: PanelOrientation,
}

/// Layout with default heights (gNB 25 m, repeater 10 m, UE 1.5 m).
pub fn build_layout(
    isd: f64,
    gnb_ue_distance: f64,
    ncr_offset: f64,
) -> Result<ScenarioLayout, ScenarioError> {
    ScenarioLayout::build(&LayoutParams::new(isd, gnb_ue_distance, ncr_offset))
}

impl ScenarioLayout {
    pub fn build(p: &LayoutParams) -> Result<Self, ScenarioError> {
        p.validate()?;
        let b1 = Point3::new(0.0, 0.0, p.gnb_height);
        let b2 = Point3::new(p.isd, 0.0, p.gnb_height);
        let u1 = Point3::new(p.gnb_ue_distance, 0.0, p.ue_height);
        let u2 = Point3::new(p.isd - p.gnb_ue_distance, 0.0, p.ue_height);
        let ncr = Point3::new(p.isd - p.ncr_offset, 0.0, p.ncr_height);

        let nodes = [
            NodeDescriptor {
                id: NodeId::B1,
                position: b1,
            },
            NodeDescriptor {
                id: NodeId::B2,
                position: b2,
            },
            NodeDescriptor {
                id: NodeId::Ncr,
                position: ncr,
            },
            NodeDescriptor {
                id: NodeId::U1,
                position: u1,
            },
            NodeDescriptor {
                id: NodeId::U2,
                position: u2,
            },
        ];

        // Access panel: bearing toward U2, fixed mechanical tilt. When the
        // repeater sits right above U2 there is no bearing; keep facing B1's side.
        let access_bearing = if ncr.horizontal_distance(u2) > 0.0 {
            Direction::between(ncr, u2).azimuth
        } else {
            Direction::between(b2, b1).azimuth
        };

        Ok(Self {
            nodes,
            isd: p.isd,
            gnb_ue_distance: p.gnb_ue_distance,
            ncr_offset: p.ncr_offset,
            b1_panel: PanelOrientation::toward(b1, b1.midpoint(u1)),
            b2_panel: PanelOrientation::toward(b2, b2.midpoint(u2)),
            ncr_backhaul_panel: PanelOrientation::toward(ncr, b2),
            ncr_access_panel: PanelOrientation::new(access_bearing, p.ncr_access_downtilt),
        })
    }

    pub fn nodes(&self) -> &[NodeDescriptor; 5] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeDescriptor {
        // `nodes` is stored in `NodeId::ALL` order.
        &self.nodes[id as usize]
    }

    pub fn position(&self, id: NodeId) -> Point3 {
        self.node(id).position
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        distance_3d(self.node(a), self.node(b))
    }

    pub fn direction(&self, from: NodeId, to: NodeId) -> Direction {
        Direction::between(self.position(from), self.position(to))
    }

    pub fn panel(&self, panel: PanelId) -> PanelOrientation {
        match panel {
            PanelId::B1 => self.b1_panel,
            PanelId::B2 => self.b2_panel,
            PanelId::NcrBackhaul => self.ncr_backhaul_panel,
            PanelId::NcrAccess => self.ncr_access_panel,
        }
    }

    /// Isotropic radius `R` of each cell (half the ISD).
    pub fn cell_radius(&self) -> f64 {
        self.isd / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midway_repeater() {
        let l = build_layout(400.0, 150.0, 75.0).unwrap();
        let b2 = l.position(NodeId::B2);
        let ncr = l.position(NodeId::Ncr);
        let u2 = l.position(NodeId::U2);
        assert_eq!(b2.horizontal_distance(ncr), 75.0);
        assert_eq!(ncr.horizontal_distance(u2), 75.0);
        assert_eq!(l.cell_radius(), 200.0);
    }

    #[test]
    fn collocated_repeater_needs_override() {
        let err = build_layout(400.0, 150.0, 150.0).unwrap_err();
        assert!(err.to_string().contains("ncr_offset"));
        let l = ScenarioLayout::build(&LayoutParams::new(400.0, 150.0, 150.0).with_override(true))
            .unwrap();
        assert_eq!(
            l.position(NodeId::Ncr)
                .horizontal_distance(l.position(NodeId::U2)),
            0.0
        );
        assert!(build_layout(400.0, 150.0, 0.0).is_err());
        assert!(build_layout(400.0, 150.0, -3.0).is_err());
        assert!(build_layout(400.0, 250.0, 100.0).is_err());
        assert!(build_layout(-400.0, 150.0, 75.0).is_err());
    }

    #[test]
    fn beam_switch_vicinity_offset() {
        let l = build_layout(400.0, 150.0, 81.0).unwrap();
        assert_eq!(
            l.position(NodeId::B2)
                .horizontal_distance(l.position(NodeId::Ncr)),
            81.0
        );
    }

    #[test]
    fn distances() {
        let b2 = NodeDescriptor {
            id: NodeId::B2,
            position: Point3::new(400.0, 0.0, 25.0),
        };
        let u2 = NodeDescriptor {
            id: NodeId::U2,
            position: Point3::new(250.0, 0.0, 1.5),
        };
        let b1 = NodeDescriptor {
            id: NodeId::B1,
            position: Point3::new(0.0, 0.0, 25.0),
        };
        assert!((distance_3d(&b2, &u2) - 151.829_674_306_441_16).abs() < 1e-9);
        assert_eq!(distance_3d(&b2, &b2), 0.0);
        assert_eq!(distance_3d(&b1, &b2), 400.0);
        assert_eq!(distance_3d(&b2, &u2), distance_3d(&u2, &b2));
    }

    #[test]
    fn mirror_symmetry_without_repeater() {
        let l = build_layout(400.0, 150.0, 60.0).unwrap();
        let mirror = |p: Point3| Point3::new(l.isd - p.x, p.y, p.z);
        assert_eq!(mirror(l.position(NodeId::B1)), l.position(NodeId::B2));
        assert_eq!(mirror(l.position(NodeId::U1)), l.position(NodeId::U2));
        let (b1, b2) = (l.panel(PanelId::B1), l.panel(PanelId::B2));
        assert!((b1.downtilt - b2.downtilt).abs() < 1e-15);
        assert!(((b2.bearing - b1.bearing).abs() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sweep_preserves_other_nodes() {
        let a = build_layout(400.0, 150.0, 10.0).unwrap();
        for off in [15.0, 75.0, 145.0] {
            let b = build_layout(400.0, 150.0, off).unwrap();
            for id in [NodeId::B1, NodeId::B2, NodeId::U1, NodeId::U2] {
                let (pa, pb) = (a.position(id), b.position(id));
                assert_eq!(pa.x.to_bits(), pb.x.to_bits());
                assert_eq!(pa.y.to_bits(), pb.y.to_bits());
                assert_eq!(pa.z.to_bits(), pb.z.to_bits());
            }
            assert_eq!(a.panel(PanelId::B1), b.panel(PanelId::B1));
            assert_eq!(a.panel(PanelId::B2), b.panel(PanelId::B2));
        }
    }

    #[test]
    fn panel_pointing() {
        let l = build_layout(400.0, 150.0, 75.0).unwrap();
        // gNB boresight aims at the 3D midpoint of the gNB-UE segment.
        let b1 = l.panel(PanelId::B1);
        assert!(b1.bearing.abs() < 1e-15);
        assert!((b1.downtilt - (11.75f64 / 75.0).atan()).abs() < 1e-12);
        let bh = l.panel(PanelId::NcrBackhaul);
        let to_b2 = l.direction(NodeId::Ncr, NodeId::B2);
        assert!((bh.boresight().elevation - to_b2.elevation).abs() < 1e-15);
        let acc = l.panel(PanelId::NcrAccess);
        assert!((acc.bearing - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(acc.downtilt, 0.0);
    }
}
