//! Scenario description: room, LED/PD arrays, mirror array, motion and
//! estimation parameters, with JSON presets, validation, and channel
//! generation helpers.

use sha2::{Digest, Sha256};

use serde::{Deserialize, Serialize};

use crate::channel::{
    lambertian_gain, patch_gain, CascadedChannel, Led, OirsArray, Pd, QuadratureSpec,
};
use crate::codebook::FloorRect;
use crate::coherence::CoherenceGeometry;
use crate::error::{Error, Result};
use crate::geometry::{UnitVec3, Vec3};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoomDims {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OirsSpec {
    pub center: Vec3,
    pub normal: UnitVec3,
    pub n_v: usize,
    pub n_h: usize,
    pub side: f64,
    pub spacing: f64,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub room: RoomDims,
    pub leds: Vec<Led>,
    pub pds: Vec<Pd>,
    pub oirs: OirsSpec,
    /// Receiver velocity for the temporal-coherence study, m/s.
    pub velocity: Vec3,
    /// Positioning uncertainty radius r for beam sweeping, meters.
    pub positioning_radius: f64,
    /// Coherence threshold.
    pub xi_c: f64,
    /// Noise grid, relative to the RMS cascaded gain.
    pub sigma_rel: Vec<f64>,
    /// Pilot slots per block.
    pub pilot_len: usize,
    /// Monte-Carlo trials for NMSE curves.
    pub trials: usize,
}

impl Scenario {
    pub fn paper_siso() -> Scenario {
        let down = UnitVec3::try_from_vec(Vec3::new(0.0, 0.0, -1.0)).unwrap();
        let up = UnitVec3::try_from_vec(Vec3::Z).unwrap();
        let into_room = UnitVec3::try_from_vec(Vec3::Y).unwrap();
        Scenario {
            room: RoomDims { x: 4.0, y: 4.0, z: 3.0 },
            leds: vec![Led {
                center: Vec3::new(2.0, 2.0, 3.0),
                normal: down,
                radius: 0.1,
                lambertian_index: 1.0,
                emitted_power: 1.0,
            }],
            pds: vec![Pd {
                center: Vec3::new(2.0, 2.0, 0.0),
                normal: up,
                side: 0.1,
                fov_semi_angle: 70.0_f64.to_radians(),
                filter_gain: 1.0,
            }],
            oirs: OirsSpec {
                center: Vec3::new(2.0, 0.0, 1.5),
                normal: into_room,
                n_v: 24,
                n_h: 24,
                side: 0.05,
                spacing: 0.1,
                reflectivity: 0.9,
            },
            velocity: Vec3::new(0.5, 0.0, 0.0),
            positioning_radius: 0.5,
            xi_c: 0.04,
            sigma_rel: vec![0.05, 0.15, 0.5, 1.5, 5.0],
            pilot_len: 100,
            trials: 50,
        }
    }

    /// 2x2 MIMO variant: two LEDs and two PDs straddling the SISO positions
    /// at the 0.4 m device spacing.
    pub fn paper_mimo() -> Scenario {
        let mut s = Scenario::paper_siso();
        let led = s.leds[0];
        s.leds = [-0.2, 0.2]
            .iter()
            .map(|dx| Led { center: led.center + Vec3::X * *dx, ..led })
            .collect();
        let pd = s.pds[0];
        s.pds = [-0.2, 0.2]
            .iter()
            .map(|dx| Pd { center: pd.center + Vec3::X * *dx, ..pd })
            .collect();
        s
    }

    pub fn preset(name: &str) -> Result<Scenario> {
        match name {
            "paper-siso" => Ok(Scenario::paper_siso()),
            "paper-mimo" => Ok(Scenario::paper_mimo()),
            other => Err(Error::Config {
                path: "preset".into(),
                message: format!("unknown preset '{other}'"),
            }),
        }
    }

    /// Parses a scenario document. A `"preset"` key selects a baseline whose
    /// fields the remaining top-level keys override.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Config {
                path: "$".into(),
                message: "scenario document must be a JSON object".into(),
            })?;
        let scenario = if let Some(preset) = obj.remove("preset") {
            let name = preset.as_str().ok_or_else(|| Error::Config {
                path: "preset".into(),
                message: "preset must be a string".into(),
            })?;
            let mut base = serde_json::to_value(Scenario::preset(name)?)?;
            let base_obj = base.as_object_mut().unwrap();
            for (k, v) in obj.iter() {
                if !base_obj.contains_key(k) {
                    return Err(Error::Config {
                        path: k.clone(),
                        message: "unknown scenario field".into(),
                    });
                }
                base_obj.insert(k.clone(), v.clone());
            }
            serde_json::from_value(base)?
        } else {
            serde_json::from_value(value)?
        };
        let scenario: Scenario = scenario;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |p: Vec3, label: &str| -> Result<()> {
            if p.x < 0.0 || p.x > self.room.x || p.y < 0.0 || p.y > self.room.y || p.z < 0.0
                || p.z > self.room.z
            {
                return Err(Error::Config {
                    path: label.into(),
                    message: format!("position {p:?} outside the room"),
                });
            }
            Ok(())
        };
        if self.leds.is_empty() || self.pds.is_empty() {
            return Err(Error::Config {
                path: "leds/pds".into(),
                message: "at least one LED and one PD required".into(),
            });
        }
        for (i, led) in self.leds.iter().enumerate() {
            led.validate()?;
            inside(led.center, &format!("leds[{i}]"))?;
        }
        for (i, pd) in self.pds.iter().enumerate() {
            pd.validate()?;
            inside(pd.center, &format!("pds[{i}]"))?;
        }
        inside(self.oirs.center, "oirs.center")?;
        if self.oirs.n_v == 0 || self.oirs.n_h == 0 {
            return Err(Error::Config {
                path: "oirs".into(),
                message: "element grid must be non-empty".into(),
            });
        }
        if self.oirs.side <= 0.0 || self.oirs.spacing < self.oirs.side {
            return Err(Error::Config {
                path: "oirs".into(),
                message: "element side must be positive and fit within the spacing".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.oirs.reflectivity) || self.oirs.reflectivity == 0.0 {
            return Err(Error::Config {
                path: "oirs.reflectivity".into(),
                message: "reflectivity must lie in (0, 1]".into(),
            });
        }
        if !(0.0..1.0).contains(&self.xi_c) || self.xi_c == 0.0 {
            return Err(Error::Config {
                path: "xi_c".into(),
                message: "coherence threshold must lie in (0, 1)".into(),
            });
        }
        if self.positioning_radius <= 0.0 {
            return Err(Error::Config {
                path: "positioning_radius".into(),
                message: "positioning radius must be positive".into(),
            });
        }
        if self.pilot_len == 0 || self.trials == 0 {
            return Err(Error::Config {
                path: "pilot_len/trials".into(),
                message: "pilot length and trial count must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn floor(&self) -> FloorRect {
        FloorRect { x_min: 0.0, x_max: self.room.x, y_min: 0.0, y_max: self.room.y }
    }

    pub fn oirs_array(&self) -> Result<OirsArray> {
        OirsArray::grid(
            self.oirs.center,
            self.oirs.normal,
            self.oirs.n_v,
            self.oirs.n_h,
            self.oirs.side,
            self.oirs.spacing,
            self.oirs.reflectivity,
        )
    }

    /// Coherence geometry of the array center and the first LED/PD pair.
    pub fn coherence_geometry(&self) -> Result<CoherenceGeometry> {
        CoherenceGeometry::new(
            self.leds[0].center,
            self.oirs.center,
            self.pds[0].center,
            self.leds[0].normal,
            self.pds[0].normal,
            self.leds[0].lambertian_index,
        )
    }

    /// Calibrates the point-model scale against the aperture-quadrature gain
    /// at perfect alignment of the center element with the first pair.
    pub fn lambertian_scale(&self) -> Result<f64> {
        let led = &self.leds[0];
        let pd = &self.pds[0];
        let mut elem = crate::channel::OirsElement {
            center: self.oirs.center,
            roll: 0.0,
            yaw: 0.0,
            side: self.oirs.side,
            reflectivity: self.oirs.reflectivity,
        };
        let (w, g) = crate::codebook::alignment_angles(led.center, elem.center, pd.center)?;
        elem.roll = w;
        elem.yaw = g;
        let quad = QuadratureSpec::default();
        let exact = patch_gain(&elem, led, pd, &quad)?;
        let point = lambertian_gain(elem.center, pd.center, led, pd, 1.0)?;
        if point <= 0.0 || exact <= 0.0 {
            return Err(Error::Degenerate(
                "calibration geometry yields zero gain".into(),
            ));
        }
        Ok(exact / point)
    }

    /// Cascaded per-element, per-pair channel from the point model: entry
    /// (n, (r, t)) is the aligned gain LED t -> element n -> PD r.
    pub fn cascaded_channel(&self, k: f64) -> Result<CascadedChannel> {
        let array = self.oirs_array()?;
        let n = array.len();
        let (n_t, n_r) = (self.leds.len(), self.pds.len());
        let mut h_c = Mat::zeros(n, n_t * n_r);
        for (e, elem) in array.elements.iter().enumerate() {
            for (t, led) in self.leds.iter().enumerate() {
                for (r, pd) in self.pds.iter().enumerate() {
                    let gain =
                        elem.reflectivity * lambertian_gain(elem.center, pd.center, led, pd, k)?;
                    h_c[(e, r + t * n_r)] = gain;
                }
            }
        }
        CascadedChannel::new(h_c, n_r)
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
