//! BB84 and set-announcement (SARG) protocols: Alice's preparation, Bob's
//! Pauli measurement, both sifting rules, and Monte Carlo sessions over the
//! lossy channel without an eavesdropper.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::photonics::{self, ChannelParams};
use crate::qcore::{self, pauli_plus_probability, qubit_state, Axis, Sign, StateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Bb84,
    Sarg,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 2] = [ProtocolKind::Bb84, ProtocolKind::Sarg];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Bb84 => "bb84",
            ProtocolKind::Sarg => "sarg",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(ProtocolKind::Bb84),
            "sarg" | "sarg04" => Ok(ProtocolKind::Sarg),
            other => Err(format!("unknown protocol '{other}' (expected bb84 or sarg)")),
        }
    }
}

/// Public announcement `A_{ω,ω'} = {|ωx>, |ω'z>}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SetAnnouncement {
    pub omega: Sign,
    pub omega_prime: Sign,
}

impl SetAnnouncement {
    pub const ALL: [SetAnnouncement; 4] = [
        SetAnnouncement { omega: Sign::Plus, omega_prime: Sign::Plus },
        SetAnnouncement { omega: Sign::Plus, omega_prime: Sign::Minus },
        SetAnnouncement { omega: Sign::Minus, omega_prime: Sign::Plus },
        SetAnnouncement { omega: Sign::Minus, omega_prime: Sign::Minus },
    ];

    pub fn x_member(self) -> StateLabel {
        StateLabel::new(Axis::X, self.omega)
    }

    pub fn z_member(self) -> StateLabel {
        StateLabel::new(Axis::Z, self.omega_prime)
    }

    pub fn contains(self, label: StateLabel) -> bool {
        label == self.x_member() || label == self.z_member()
    }

    /// The announcement containing `sent`, with the other member's sign given.
    pub fn containing(sent: StateLabel, partner: Sign) -> SetAnnouncement {
        match sent.axis() {
            Axis::X => SetAnnouncement { omega: sent.sign(), omega_prime: partner },
            Axis::Z => SetAnnouncement { omega: partner, omega_prime: sent.sign() },
        }
    }
}

/// What Alice reveals during sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Announcement {
    Basis(Axis),
    Set(SetAnnouncement),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preparation {
    pub bit: u8,
    pub label: StateLabel,
    pub announcement: Announcement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiftOutcome {
    Conclusive(u8),
    Discard,
}

/// BB84 bit: `+` codes 0, `-` codes 1 in either basis.
pub fn bb84_bit(sign: Sign) -> u8 {
    match sign {
        Sign::Plus => 0,
        Sign::Minus => 1,
    }
}

/// Alice picks one of the four states uniformly. For SARG the partner sign
/// of the announced set is also uniform.
pub fn alice_prepare<R: Rng + ?Sized>(protocol: ProtocolKind, rng: &mut R) -> Preparation {
    let label = StateLabel::ALL[rng.random_range(0..4)];
    match protocol {
        ProtocolKind::Bb84 => Preparation {
            bit: bb84_bit(label.sign()),
            label,
            announcement: Announcement::Basis(label.axis()),
        },
        ProtocolKind::Sarg => {
            let partner = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
            Preparation {
                bit: label.bit(),
                label,
                announcement: Announcement::Set(SetAnnouncement::containing(label, partner)),
            }
        }
    }
}

pub fn sift_bb84(alice_basis: Axis, bob_basis: Axis, bob_outcome: Sign) -> SiftOutcome {
    if alice_basis == bob_basis {
        SiftOutcome::Conclusive(bb84_bit(bob_outcome))
    } else {
        SiftOutcome::Discard
    }
}

/// Bob keeps a result only when his eigenstate is orthogonal to one member of
/// the announced set; the other member is then the state that was sent.
pub fn sift_sarg(announcement: SetAnnouncement, bob_axis: Axis, bob_outcome: Sign) -> SiftOutcome {
    match bob_axis {
        Axis::Z if bob_outcome == announcement.omega_prime.flip() => SiftOutcome::Conclusive(0),
        Axis::X if bob_outcome == announcement.omega.flip() => SiftOutcome::Conclusive(1),
        _ => SiftOutcome::Discard,
    }
}

pub fn sift(announcement: Announcement, bob_axis: Axis, bob_outcome: Sign) -> SiftOutcome {
    match announcement {
        Announcement::Basis(basis) => sift_bb84(basis, bob_axis, bob_outcome),
        Announcement::Set(set) => sift_sarg(set, bob_axis, bob_outcome),
    }
}

/// Fraction of detections surviving sifting.
pub fn sift_ratio_analytic(protocol: ProtocolKind) -> f64 {
    match protocol {
        ProtocolKind::Bb84 => 0.5,
        ProtocolKind::Sarg => 0.25,
    }
}

/// One row of the sifting truth table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftCase {
    pub sent: StateLabel,
    pub alice_bit: u8,
    pub announcement: Announcement,
    pub bob_axis: Axis,
    pub bob_outcome: Sign,
    /// Joint probability of this row given a detection.
    pub probability: f64,
    pub result: SiftOutcome,
}

/// Every (sent state, announcement, Bob axis, Bob outcome) combination with
/// its probability: 16 rows for BB84, 32 for SARG.
pub fn sifting_cases(protocol: ProtocolKind) -> Vec<SiftCase> {
    let mut cases = Vec::new();
    for sent in StateLabel::ALL {
        let (alice_bit, announcements): (u8, Vec<(Announcement, f64)>) = match protocol {
            ProtocolKind::Bb84 => (bb84_bit(sent.sign()), vec![(Announcement::Basis(sent.axis()), 1.0)]),
            ProtocolKind::Sarg => (
                sent.bit(),
                [Sign::Plus, Sign::Minus]
                    .iter()
                    .map(|&p| (Announcement::Set(SetAnnouncement::containing(sent, p)), 0.5))
                    .collect(),
            ),
        };
        let state = qubit_state(sent);
        for &(announcement, p_ann) in &announcements {
            for bob_axis in [Axis::X, Axis::Z] {
                let p_plus = pauli_plus_probability(&state, bob_axis).expect("single qubit");
                for (bob_outcome, p_out) in [(Sign::Plus, p_plus), (Sign::Minus, 1.0 - p_plus)] {
                    cases.push(SiftCase {
                        sent,
                        alice_bit,
                        announcement,
                        bob_axis,
                        bob_outcome,
                        probability: 0.25 * p_ann * 0.5 * p_out,
                        result: sift(announcement, bob_axis, bob_outcome),
                    });
                }
            }
        }
    }
    cases
}

/// Outcome counts of a Monte Carlo session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionStats {
    pub pulses_sent: u64,
    pub bob_detections: u64,
    pub sifted_bits: u64,
    pub errors: u64,
    pub qber: f64,
    /// Sifted bits per detection.
    pub sift_ratio: f64,
    /// Sifted bits per pulse.
    pub net_key_rate: f64,
}

impl SessionStats {
    fn from_counts(pulses_sent: u64, bob_detections: u64, sifted_bits: u64, errors: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            pulses_sent,
            bob_detections,
            sifted_bits,
            errors,
            qber: ratio(errors, sifted_bits),
            sift_ratio: ratio(sifted_bits, bob_detections),
            net_key_rate: ratio(sifted_bits, pulses_sent),
        }
    }

    pub fn detection_rate(&self) -> f64 {
        self.bob_detections as f64 / self.pulses_sent as f64
    }

    /// Binomial standard error of the sift ratio around `expected`.
    pub fn sift_ratio_std_error(&self, expected: f64) -> f64 {
        (expected * (1.0 - expected) / self.bob_detections.max(1) as f64).sqrt()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    detections: u64,
    sifted: u64,
    errors: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            detections: self.detections + o.detections,
            sifted: self.sifted + o.sifted,
            errors: self.errors + o.errors,
        }
    }
}

/// Random stream for pulse `index`, fixed by `(seed, index)` alone.
pub fn pulse_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn simulate_pulse(params: &ChannelParams, protocol: ProtocolKind, eta: f64, rng: &mut ChaCha8Rng) -> Tally {
    let prep = alice_prepare(protocol, rng);
    let photons = photonics::sample_photon_number(params.mu, params.n_max, rng);
    if !photonics::sample_detection(photons, eta, rng) {
        return Tally::default();
    }
    // All photons of a pulse share one pure state, so a single Born draw
    // stands for whichever photon fired the detector.
    let bob_axis = if rng.random::<bool>() { Axis::X } else { Axis::Z };
    let (outcome, _) = qcore::measure_pauli(&qubit_state(prep.label), bob_axis, rng.random::<f64>())
        .expect("single-qubit state");
    match sift(prep.announcement, bob_axis, outcome) {
        SiftOutcome::Conclusive(bit) => Tally {
            detections: 1,
            sifted: 1,
            errors: u64::from(bit != prep.bit),
        },
        SiftOutcome::Discard => Tally { detections: 1, ..Tally::default() },
    }
}

/// Pulse-by-pulse session without eavesdropper. Pulses run in parallel; the
/// result depends only on `(params, protocol, pulses, seed)`.
pub fn run_session(params: &ChannelParams, protocol: ProtocolKind, pulses: u64, seed: u64) -> SessionStats {
    let eta = params.eta_det * params.transmittance();
    let tally = (0..pulses)
        .into_par_iter()
        .map(|i| simulate_pulse(params, protocol, eta, &mut pulse_rng(seed, i)))
        .reduce(Tally::default, Tally::merge);
    SessionStats::from_counts(pulses, tally.detections, tally.sifted, tally.errors)
}
