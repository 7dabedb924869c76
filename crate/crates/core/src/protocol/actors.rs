use rand::Rng;

use crate::bits::Bits;
use crate::fading::{bob_decodes, eve_erased};

/// One bit on the public, error-free feedback channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Ack,
    Nack,
}

/// Sender. Holds the frame in flight until feedback arrives; a NACK drops
/// it for good.
#[derive(Debug)]
pub struct Alice {
    parts_needed: u32,
    in_flight: Option<Bits>,
    accepted: Vec<Bits>,
}

impl Alice {
    pub fn new(parts_needed: u32) -> Self {
        Self {
            parts_needed,
            in_flight: None,
            accepted: Vec::new(),
        }
    }

    pub fn done(&self) -> bool {
        self.accepted.len() as u32 >= self.parts_needed
    }

    /// Draws a fresh payload; the previous one must have been resolved.
    pub fn next_frame<R: Rng + ?Sized>(&mut self, width: usize, rng: &mut R) -> Bits {
        debug_assert!(self.in_flight.is_none());
        let payload = Bits::random(width, rng);
        self.in_flight = Some(payload.clone());
        payload
    }

    pub fn on_feedback(&mut self, fb: Feedback) {
        let frame = self
            .in_flight
            .take()
            .expect("feedback without a frame in flight");
        if fb == Feedback::Ack {
            self.accepted.push(frame);
        }
    }

    pub fn key(&self) -> Bits {
        Bits::concat(&self.accepted)
    }
}

/// Legitimate receiver with perfect error detection.
#[derive(Debug)]
pub struct Bob {
    r0: f64,
    power: f64,
    accepted: Vec<Bits>,
}

impl Bob {
    pub fn new(r0: f64, power: f64) -> Self {
        Self {
            r0,
            power,
            accepted: Vec::new(),
        }
    }

    pub fn receive(&mut self, payload: &Bits, h_b: f64) -> Feedback {
        if bob_decodes(self.r0, h_b, self.power) {
            self.accepted.push(payload.clone());
            Feedback::Ack
        } else {
            Feedback::Nack
        }
    }

    pub fn key(&self) -> Bits {
        Bits::concat(&self.accepted)
    }
}

/// Passive eavesdropper. Decodes what her channel and Genie allow, keeps a
/// frame only once the public feedback marks it ACKed.
#[derive(Debug)]
pub struct Eve {
    r0: f64,
    rc: f64,
    power: f64,
    pending: Option<Option<Bits>>,
    /// One entry per ACKed frame; `None` where she erased it.
    parts: Vec<Option<Bits>>,
}

impl Eve {
    pub fn new(r0: f64, rc: f64, power: f64) -> Self {
        Self {
            r0,
            rc,
            power,
            pending: None,
            parts: Vec::new(),
        }
    }

    /// Returns whether she decoded the frame.
    pub fn overhear(&mut self, payload: &Bits, h_e: f64) -> bool {
        let decoded = !eve_erased(self.r0, self.rc, h_e, self.power);
        self.pending = Some(decoded.then(|| payload.clone()));
        decoded
    }

    pub fn on_feedback(&mut self, fb: Feedback) {
        let heard = self
            .pending
            .take()
            .expect("feedback without an overheard frame");
        if fb == Feedback::Ack {
            self.parts.push(heard);
        }
    }

    pub fn parts(&self) -> &[Option<Bits>] {
        &self.parts
    }

    pub fn holds_all(&self) -> bool {
        self.parts.iter().all(Option::is_some)
    }
}
