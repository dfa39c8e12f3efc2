//! Scenario scripts and their deterministic playback.
//!
//! A script is a TOML document:
//!
//! ```toml
//! name = "standard-workload"
//! width = 480
//! height = 800
//! seed = 7
//!
//! [[step]]
//! generator = "home"          # home | browser_scroll | music_player | transition
//! duration_ms = 1000
//! params = { }                # generator-specific numbers
//!
//! [[sensor]]
//! kind = "gps"                # accelerometer | gps | proximity
//! points = [[0, 40.41, -3.70], [10000, 40.42, -3.69]]   # [t_ms, values...]
//! ```

use super::generators::{crossfade, GeneratorId, Params, Renderer};
use super::sensors::SensorScript;
use super::DeviceError;
use crate::pixel::{FrameBuffer, PixelFormat};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub generator: String,
    pub duration_ms: u64,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_width")]
    pub width: u16,
    #[serde(default = "default_height")]
    pub height: u16,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "step", default)]
    pub steps: Vec<Step>,
    #[serde(rename = "sensor", default)]
    pub sensors: Vec<SensorScript>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_width() -> u16 {
    480
}

fn default_height() -> u16 {
    800
}

impl ScenarioScript {
    pub fn from_toml(text: &str) -> Result<Self, DeviceError> {
        toml::from_str(text).map_err(|e| DeviceError::InvalidScenario(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, DeviceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DeviceError::InvalidScenario(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn total_duration_ms(&self) -> u64 {
        self.steps.iter().map(|s| s.duration_ms).sum()
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.width == 0 || self.height == 0 {
            return Err(DeviceError::InvalidScenario("screen size must be non-zero".into()));
        }
        if self.steps.is_empty() {
            return Err(DeviceError::InvalidScenario("scenario has no steps".into()));
        }
        if self.total_duration_ms() == 0 {
            return Err(DeviceError::InvalidScenario("total duration must be positive".into()));
        }
        let last = self.steps.len() - 1;
        for (i, s) in self.steps.iter().enumerate() {
            let g = GeneratorId::from_name(&s.generator)?;
            if g == GeneratorId::Transition && (i == 0 || i == last) {
                return Err(DeviceError::InvalidScenario("a transition needs a step on each side".into()));
            }
        }
        for s in &self.sensors {
            s.validate()?;
        }
        Ok(())
    }
}

/// The benchmark workload: home, open the browser and scroll for three
/// seconds, open the music player for three seconds, return home.
pub fn standard_workload() -> ScenarioScript {
    let step = |generator: &str, duration_ms: u64| Step {
        generator: generator.into(),
        duration_ms,
        params: Params::new(),
    };
    ScenarioScript {
        name: "standard-workload".into(),
        width: 480,
        height: 800,
        seed: 7,
        steps: vec![
            step("home", 1000),
            step("transition", 300),
            step("browser_scroll", 3000),
            step("transition", 300),
            step("music_player", 3000),
            step("transition", 300),
            step("home", 2100),
        ],
        sensors: super::sensors::default_sensor_scripts(),
    }
}

struct LoadedStep {
    id: GeneratorId,
    start_ms: u64,
    duration_ms: u64,
    renderer: Renderer,
}

/// Deterministic frame source for a script.
pub struct ScenarioPlayer {
    script: Arc<ScenarioScript>,
    steps: Vec<LoadedStep>,
    last_now: Option<u64>,
    skipped_ms: u64,
    cache: Option<(u64, Arc<FrameBuffer>)>,
}

pub fn load_scenario(script: ScenarioScript) -> Result<ScenarioPlayer, DeviceError> {
    script.validate()?;
    let mut start = 0;
    let mut steps = Vec::with_capacity(script.steps.len());
    for (i, s) in script.steps.iter().enumerate() {
        let id = GeneratorId::from_name(&s.generator)?;
        let seed = script.seed.wrapping_add(i as u64 * 0x100);
        steps.push(LoadedStep { id, start_ms: start, duration_ms: s.duration_ms, renderer: Renderer::new(id, &s.params, seed) });
        start += s.duration_ms;
    }
    Ok(ScenarioPlayer { script: Arc::new(script), steps, last_now: None, skipped_ms: 0, cache: None })
}

impl ScenarioPlayer {
    pub fn script(&self) -> &ScenarioScript {
        &self.script
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn dimensions(&self) -> (u16, u16) {
        (self.script.width, self.script.height)
    }

    pub fn total_duration_ms(&self) -> u64 {
        self.script.total_duration_ms()
    }

    /// Index of the step active at scenario time `t`; the last step past the end.
    pub fn step_at(&self, t: u64) -> usize {
        self.steps.iter().rposition(|s| s.start_ms <= t).unwrap_or(0).min(self.steps.len() - 1)
    }

    pub fn generator_at(&self, t: u64) -> GeneratorId {
        self.steps[self.step_at(t)].id
    }

    /// Scenario time is clamped to the last millisecond of the script, so
    /// the final frame freezes.
    fn clamp(&self, t: u64) -> u64 {
        t.min(self.total_duration_ms().saturating_sub(1))
    }

    fn render_step(&self, index: usize, local_ms: u64) -> FrameBuffer {
        let (w, h) = self.dimensions();
        let step = &self.steps[index];
        if let Renderer::Transition { steps } = step.renderer {
            let before = &self.steps[index - 1];
            let from = self.render_step(index - 1, before.duration_ms.saturating_sub(1));
            let to = self.render_step(index + 1, 0);
            return crossfade(&from, &to, local_ms, step.duration_ms, steps);
        }
        let mut fb = FrameBuffer::new(w, h, PixelFormat::canonical(), 0);
        step.renderer.render(&mut fb, local_ms);
        fb
    }

    /// Pure lookup of the frame at scenario time `t`.
    pub fn frame_at(&self, t: u64) -> FrameBuffer {
        let t = self.clamp(t);
        let i = self.step_at(t);
        self.render_step(i, t - self.steps[i].start_ms)
    }

    /// Frame for wall-clock `now_ms`; `now_ms` may not go backwards.
    pub fn advance(&mut self, now_ms: u64) -> Result<Arc<FrameBuffer>, DeviceError> {
        if let Some(last) = self.last_now {
            if now_ms < last {
                return Err(DeviceError::TimeRegression { last, now: now_ms });
            }
        }
        self.last_now = Some(now_ms);
        let t = self.clamp(now_ms + self.skipped_ms);
        if let Some((ct, fb)) = &self.cache {
            if *ct == t {
                return Ok(fb.clone());
            }
        }
        let fb = Arc::new(self.frame_at(t));
        self.cache = Some((t, fb.clone()));
        Ok(fb)
    }

    /// Jumps to the start of the next step (a tap on the screen).
    pub fn skip_step(&mut self) {
        let now = self.last_now.unwrap_or(0);
        let t = self.clamp(now + self.skipped_ms);
        let i = self.step_at(t);
        if let Some(next) = self.steps.get(i + 1) {
            self.skipped_ms += next.start_ms - t;
        }
    }

    /// Scenario time corresponding to wall-clock `now_ms`.
    pub fn scenario_time(&self, now_ms: u64) -> u64 {
        self.clamp(now_ms + self.skipped_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_shape() {
        let s = standard_workload();
        assert_eq!(s.total_duration_ms(), 10_000);
        assert_eq!(s.steps.len(), 7);
        assert_eq!(s.steps[2].generator, "browser_scroll");
        assert_eq!(s.steps[2].duration_ms, 3000);
        assert_eq!(s.steps[4].generator, "music_player");
        assert_eq!(s.steps[4].duration_ms, 3000);
        let p = load_scenario(s).unwrap();
        assert_eq!(p.step_count(), 7);
        assert_eq!(p.generator_at(0), GeneratorId::Home);
    }

    #[test]
    fn empty_steps_rejected() {
        let s = ScenarioScript { steps: vec![], ..standard_workload() };
        assert!(matches!(load_scenario(s), Err(DeviceError::InvalidScenario(_))));
    }

    #[test]
    fn unknown_generator_rejected() {
        let mut s = standard_workload();
        s.steps[0].generator = "boot_animation".into();
        assert!(matches!(load_scenario(s), Err(DeviceError::UnknownGenerator(_))));
    }

    #[test]
    fn determinism_across_players() {
        let mut a = load_scenario(standard_workload()).unwrap();
        let mut b = load_scenario(standard_workload()).unwrap();
        assert_eq!(a.advance(1000).unwrap().checksum(), b.advance(1000).unwrap().checksum());
        assert_eq!(a.advance(2500).unwrap().checksum(), b.advance(2500).unwrap().checksum());
    }

    #[test]
    fn time_regression_is_an_error() {
        let mut p = load_scenario(standard_workload()).unwrap();
        p.advance(100).unwrap();
        assert!(matches!(p.advance(99), Err(DeviceError::TimeRegression { .. })));
    }

    #[test]
    fn last_frame_freezes() {
        let mut p = load_scenario(standard_workload()).unwrap();
        let a = p.advance(10_000).unwrap();
        let b = p.advance(60_000).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.frame_at(9_999), *a);
    }

    #[test]
    fn tap_skips_to_next_step() {
        let mut p = load_scenario(standard_workload()).unwrap();
        p.advance(200).unwrap();
        p.skip_step();
        assert_eq!(p.scenario_time(200), 1000);
        assert_eq!(p.generator_at(p.scenario_time(200)), GeneratorId::Transition);
    }

    #[test]
    fn toml_round_trip() {
        let s = standard_workload();
        assert_eq!(ScenarioScript::from_toml(&s.to_toml()).unwrap(), s);
    }
}
