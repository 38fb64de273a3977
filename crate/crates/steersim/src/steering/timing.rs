//! Space-time ordering checks for the event-ready protocol.
//!
//! The four constraints checked:
//!
//! 1. the random setting choice is space-like separated from pair generation;
//! 2. the Bell-state measurement fires before the settings broadcast can
//!    reach its location;
//! 3. Bob's detection lies outside the future light cone of the earliest
//!    event at which the untrusted side could know the settings;
//! 4. the untrusted side's outcome report and Bob's detection are mutually
//!    space-like separated.
//!
//! Space-like separation margins use the vacuum speed of light (what an
//! adversary could exploit in principle); the settings broadcast in
//! constraints 2–3 propagates at `signal_speed_fraction`·c, the speed of the
//! protocol's classical signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/ns.
pub const C_M_PER_NS: f64 = 0.299_792_458;

/// A localized event: planar position in meters, time in nanoseconds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub x_m: f64,
    pub y_m: f64,
    pub time_ns: f64,
}

impl Event {
    pub fn on_line(x_m: f64, time_ns: f64) -> Self {
        Event {
            x_m,
            y_m: 0.0,
            time_ns,
        }
    }

    fn distance_m(&self, other: &Event) -> f64 {
        ((self.x_m - other.x_m).powi(2) + (self.y_m - other.y_m).powi(2)).sqrt()
    }
}

/// Positions and times of the protocol's critical events.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventGeometry {
    pub pair_generation: Event,
    pub rng_choice: Event,
    pub bsm: Event,
    pub bob_detection: Event,
    pub alice_report: Event,
}

/// One verified constraint. `margin_ns > 0` means the constraint holds with
/// that much slack.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub margin_ns: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub constraints: Vec<ConstraintCheck>,
    pub all_pass: bool,
}

impl TimingReport {
    pub fn constraint(&self, name: &str) -> Option<&ConstraintCheck> {
        self.constraints.iter().find(|c| c.name == name)
    }
}

fn spacelike_margin(a: &Event, b: &Event) -> f64 {
    a.distance_m(b) / C_M_PER_NS - (a.time_ns - b.time_ns).abs()
}

/// Verifies the four ordering constraints, returning the slack of each in
/// nanoseconds. `signal_speed_fraction` is the classical-signal speed as a
/// fraction of c (fiber-bound signals travel at about 2/3 c).
pub fn check_spacetime_ordering(
    geometry: &EventGeometry,
    signal_speed_fraction: f64,
) -> Result<TimingReport> {
    if !(signal_speed_fraction > 0.0 && signal_speed_fraction <= 1.0) {
        return Err(Error::OutOfRange {
            name: "signal_speed_fraction",
            value: signal_speed_fraction,
            range: "(0, 1]",
        });
    }
    for e in [
        &geometry.pair_generation,
        &geometry.rng_choice,
        &geometry.bsm,
        &geometry.bob_detection,
        &geometry.alice_report,
    ] {
        if !e.x_m.is_finite() || !e.y_m.is_finite() || !e.time_ns.is_finite() {
            return Err(Error::BadGeometry("non-finite event coordinate".into()));
        }
    }
    let v_signal = signal_speed_fraction * C_M_PER_NS;

    let mut constraints = Vec::with_capacity(4);

    // 1. Setting choice space-like separated from pair generation.
    constraints.push(named(
        "rng-independent-of-pair-generation",
        spacelike_margin(&geometry.rng_choice, &geometry.pair_generation),
    ));

    // 2. The BSM fires before the settings broadcast can arrive at it.
    let settings_at_bsm = geometry.rng_choice.time_ns
        + geometry.rng_choice.distance_m(&geometry.bsm) / v_signal;
    constraints.push(named(
        "bsm-before-settings-arrival",
        settings_at_bsm - geometry.bsm.time_ns,
    ));

    // 3. Bob's detection outside the future light cone of the event at which
    //    the untrusted side first knows the settings.
    let knowledge_time = geometry.rng_choice.time_ns
        + geometry.rng_choice.distance_m(&geometry.alice_report) / v_signal;
    let knowledge_event = Event {
        x_m: geometry.alice_report.x_m,
        y_m: geometry.alice_report.y_m,
        time_ns: knowledge_time,
    };
    let influence_arrival = knowledge_event.time_ns
        + knowledge_event.distance_m(&geometry.bob_detection) / C_M_PER_NS;
    constraints.push(named(
        "bob-detection-setting-independent",
        influence_arrival - geometry.bob_detection.time_ns,
    ));

    // 4. Outcome report and Bob's detection mutually space-like.
    constraints.push(named(
        "report-spacelike-from-bob",
        spacelike_margin(&geometry.alice_report, &geometry.bob_detection),
    ));

    let all_pass = constraints.iter().all(|c| c.pass);
    Ok(TimingReport {
        constraints,
        all_pass,
    })
}

fn named(name: &'static str, margin_ns: f64) -> ConstraintCheck {
    ConstraintCheck {
        name,
        margin_ns,
        pass: margin_ns > 0.0,
    }
}

/// A symmetric two-station scenario: the source, BSM and report station sit
/// at the origin, Bob's station `separation_m` away, the setting generator at
/// Bob's site. Photons and classical signals travel at
/// `signal_speed_fraction`·c and events are timed in the natural protocol
/// order.
pub fn symmetric_scenario(separation_m: f64, signal_speed_fraction: f64) -> EventGeometry {
    let v = signal_speed_fraction * C_M_PER_NS;
    let flight = separation_m / v;
    let light = separation_m / C_M_PER_NS;
    EventGeometry {
        pair_generation: Event::on_line(0.0, 0.0),
        // after generation, but outside its light cone
        rng_choice: Event::on_line(separation_m, 0.5 * light),
        // photons reach the co-located BSM immediately
        bsm: Event::on_line(0.0, 1.0),
        bob_detection: Event::on_line(separation_m, flight + 1.0),
        // held until it is space-like separated from Bob's detection
        alice_report: Event::on_line(0.0, flight + 1.0),
    }
}
