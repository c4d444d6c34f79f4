use rand::Rng;

/// Global clock for adaptive tuning.
///
/// The interval parameter `T` starts at 1 and grows by `growth` every
/// `growth_every` iterations, so tuning events become exponentially rarer as
/// the chain progresses. Setting `freeze_after` suppresses every tuning event
/// from that iteration on, which is how chains guarantee that no adaptation
/// happens inside the retained-sample window.
#[derive(Debug, Clone)]
pub struct TuningSchedule {
    pub growth: f64,
    pub growth_every: u64,
    pub freeze_after: Option<u64>,
}

impl TuningSchedule {
    pub fn new(freeze_after: Option<u64>) -> Self {
        TuningSchedule { growth: 1.2, growth_every: 5000, freeze_after }
    }

    /// Current interval multiplier `T` at iteration `iter`.
    pub fn t_factor(&self, iter: u64) -> f64 {
        self.growth.powi((iter / self.growth_every) as i32)
    }

    pub fn frozen(&self, iter: u64) -> bool {
        self.freeze_after.is_some_and(|f| iter >= f)
    }
}

impl Default for TuningSchedule {
    fn default() -> Self {
        TuningSchedule::new(None)
    }
}

/// A tuning event: the scale of some kernel was adjusted (or confirmed) at
/// `iter`. Kept so chains can assert that adaptation stopped before the
/// retained window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneEvent {
    pub iter: u64,
    pub acceptance: f64,
    pub old_scale: f64,
    pub new_scale: f64,
}

/// Per-kernel adaptive-scale driver.
///
/// Watches an acceptance counter and, at epochs spaced
/// `Uniform(base_interval.0 * T, base_interval.1 * T)` apart, multiplies the
/// proposal scale up by `up` when the acceptance rate since the last event is
/// above the band, or down by `down` when below.
#[derive(Debug, Clone)]
pub struct Tuner {
    pub band: (f64, f64),
    pub base_interval: (f64, f64),
    pub up: f64,
    pub down: f64,
    next_tune: u64,
    pub events: Vec<TuneEvent>,
}

impl Tuner {
    pub fn new<R: Rng + ?Sized>(band: (f64, f64), base_interval: (f64, f64), rng: &mut R) -> Self {
        let mut tuner = Tuner {
            band,
            base_interval,
            up: 1.25,
            down: 0.8,
            next_tune: 0,
            events: Vec::new(),
        };
        tuner.next_tune = tuner.draw_interval(1.0, rng);
        tuner
    }

    fn draw_interval<R: Rng + ?Sized>(&self, t_factor: f64, rng: &mut R) -> u64 {
        let lo = self.base_interval.0 * t_factor;
        let hi = self.base_interval.1 * t_factor;
        let raw = if hi > lo { rng.random_range(lo..hi) } else { lo };
        (raw.round() as u64).max(1)
    }

    /// Fire a tuning event if one is due. Returns true when the scale was
    /// inspected (counters are reset in that case).
    pub fn maybe_tune<R: Rng + ?Sized>(
        &mut self,
        iter: u64,
        schedule: &TuningSchedule,
        scale: &mut f64,
        accepted: &mut u64,
        proposed: &mut u64,
        rng: &mut R,
    ) -> bool {
        if schedule.frozen(iter) || iter < self.next_tune {
            return false;
        }
        let old = *scale;
        if *proposed > 0 {
            let rate = *accepted as f64 / *proposed as f64;
            if rate > self.band.1 {
                *scale *= self.up;
            } else if rate < self.band.0 {
                *scale *= self.down;
            }
            self.events.push(TuneEvent { iter, acceptance: rate, old_scale: old, new_scale: *scale });
        }
        *accepted = 0;
        *proposed = 0;
        self.next_tune = iter + self.draw_interval(schedule.t_factor(iter), rng);
        true
    }
}
