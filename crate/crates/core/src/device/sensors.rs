use super::DeviceError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Accelerometer,
    Gps,
    Proximity,
    Gyroscope,
    Light,
}

impl SensorKind {
    pub fn code(self) -> u8 {
        match self {
            SensorKind::Accelerometer => 1,
            SensorKind::Gps => 2,
            SensorKind::Proximity => 3,
            SensorKind::Gyroscope => 4,
            SensorKind::Light => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => SensorKind::Accelerometer,
            2 => SensorKind::Gps,
            3 => SensorKind::Proximity,
            4 => SensorKind::Gyroscope,
            5 => SensorKind::Light,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Accelerometer => "accelerometer",
            SensorKind::Gps => "gps",
            SensorKind::Proximity => "proximity",
            SensorKind::Gyroscope => "gyroscope",
            SensorKind::Light => "light",
        }
    }

    fn arity(self) -> usize {
        match self {
            SensorKind::Accelerometer | SensorKind::Gyroscope => 3,
            SensorKind::Gps => 2,
            SensorKind::Proximity | SensorKind::Light => 1,
        }
    }
}

/// Proximity readings at or above this distance (cm) count as "far".
pub const PROXIMITY_FAR_CM: f64 = 5.0;

/// Piecewise-linear sample table: each point is `[t_ms, v0, v1, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorScript {
    pub kind: SensorKind,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub kind: SensorKind,
    pub t_ms: u64,
    pub values: Vec<f64>,
}

impl SensorSample {
    pub fn is_far(&self) -> bool {
        self.kind == SensorKind::Proximity && self.values.first().is_some_and(|&d| d >= PROXIMITY_FAR_CM)
    }
}

impl SensorScript {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.points.is_empty() {
            return Err(DeviceError::InvalidScenario(format!("{:?} script has no points", self.kind)));
        }
        let arity = self.kind.arity();
        let mut last = -1.0;
        for p in &self.points {
            if p.len() != arity + 1 {
                return Err(DeviceError::InvalidScenario(format!("{:?} points need {} values", self.kind, arity)));
            }
            if p[0] <= last {
                return Err(DeviceError::InvalidScenario("sensor points must be time-ordered".into()));
            }
            last = p[0];
        }
        Ok(())
    }

    /// Linear interpolation between the surrounding points, held flat
    /// before the first and after the last.
    pub fn sample(&self, t_ms: u64) -> SensorSample {
        let t = t_ms as f64;
        let values = match self.points.iter().position(|p| p[0] > t) {
            Some(0) => self.points[0][1..].to_vec(),
            None => self.points[self.points.len() - 1][1..].to_vec(),
            Some(i) => {
                let (a, b) = (&self.points[i - 1], &self.points[i]);
                let f = (t - a[0]) / (b[0] - a[0]);
                a[1..].iter().zip(&b[1..]).map(|(x, y)| x + (y - x) * f).collect()
            }
        };
        SensorSample { kind: self.kind, t_ms, values }
    }
}

pub fn default_sensor_scripts() -> Vec<SensorScript> {
    vec![
        SensorScript { kind: SensorKind::Accelerometer, points: vec![vec![0.0, 0.0, 0.0, 9.81]] },
        SensorScript {
            kind: SensorKind::Gps,
            points: vec![vec![0.0, 40.4168, -3.7038], vec![10_000.0, 40.4178, -3.7018]],
        },
        SensorScript { kind: SensorKind::Proximity, points: vec![vec![0.0, 8.0]] },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_gps() {
        let s = &default_sensor_scripts()[1];
        let mid = s.sample(5000);
        assert!((mid.values[0] - 40.4173).abs() < 1e-9);
        assert!((mid.values[1] + 3.7028).abs() < 1e-9);
        assert_eq!(s.sample(50_000).values, vec![40.4178, -3.7018]);
    }

    #[test]
    fn proximity_defaults_far() {
        assert!(default_sensor_scripts()[2].sample(0).is_far());
    }

    #[test]
    fn rejects_unordered_points() {
        let s = SensorScript { kind: SensorKind::Proximity, points: vec![vec![10.0, 1.0], vec![5.0, 1.0]] };
        assert!(s.validate().is_err());
    }
}
