//! Fixed-step playback simulator.
//!
//! Advances the clock in small constant steps and moves whole chunks of
//! bytes per step. Throttling is expressed as a cumulative release schedule
//! (the server may have sent at most `schedule(t)` bytes by time `t`), which
//! is a different formulation from the event-driven backlog accounting it is
//! compared against.

#[derive(Debug, Clone)]
pub struct Scenario {
    /// `(start_s, rate_Bps)`, first start 0, ascending.
    pub segments: Vec<(f64, f64)>,
    pub media_size: f64,
    pub duration: f64,
    pub throttle_factor: f64,
    pub initial_burst: f64,
    pub startup: f64,
    pub resume: f64,
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub t_init: f64,
    /// `(start, end)` of each stall.
    pub stalls: Vec<(f64, f64)>,
    pub download_done: f64,
    pub end: f64,
}

fn rate_at(segments: &[(f64, f64)], t: f64) -> f64 {
    let mut r = segments[0].1;
    for &(s, rate) in segments {
        if s <= t + 1e-12 {
            r = rate;
        }
    }
    r
}

/// Runs until the last byte is played or `horizon` seconds pass.
pub fn simulate(sc: &Scenario, dt: f64, horizon: f64) -> Option<Outcome> {
    let enc = sc.media_size / sc.duration;
    let pace = sc.throttle_factor * enc;
    let cap = sc.capacity.unwrap_or(f64::INFINITY);
    let media = sc.media_size;

    let mut sent = 0.0_f64;
    let mut played = 0.0_f64;
    let mut schedule: Option<f64> = None;
    let mut playing = false;
    let mut started = false;
    let mut stall_start: Option<f64> = None;
    let mut t_init = None;
    let mut download_done = None;
    let mut stalls = Vec::new();

    let steps = (horizon / dt).ceil() as u64;
    for k in 0..steps {
        let t = k as f64 * dt;
        let bw = rate_at(&sc.segments, t);

        // Server side.
        let sent_before = sent;
        let mut room = bw * dt;
        if sent < sc.initial_burst {
            room = room.min(media - sent);
        } else {
            let s = schedule.get_or_insert(sent);
            *s = (*s + pace * dt).min(media);
            room = room.min(*s - sent);
        }
        let consume = if playing { enc * dt } else { 0.0 };
        room = room
            .min((cap - (sent - played) + consume).max(0.0))
            .max(0.0);
        sent += room;
        if sent >= media * (1.0 - 1e-12) {
            sent = media;
            download_done.get_or_insert(t + room.min(media - sent_before) / bw.max(1e-300));
        }

        // Client side; transitions inside the step are placed by linear
        // interpolation of the step's constant rates.
        let arrival = room / dt;
        let before = sent_before - played;
        if playing {
            let left = media - played;
            let need = left.min(enc * dt);
            if before + room >= need * (1.0 - 1e-12) {
                if left <= enc * dt {
                    let end = t + left / enc;
                    return Some(Outcome {
                        t_init: t_init?,
                        stalls,
                        download_done: download_done.unwrap_or(end),
                        end,
                    });
                }
                played += enc * dt;
            } else {
                let tau = before / (enc - arrival);
                played += enc * tau;
                playing = false;
                stall_start = Some(t + tau);
            }
        } else {
            let threshold = if started { sc.resume } else { sc.startup };
            let complete = sent >= media;
            if before + room >= threshold * (1.0 - 1e-12) || complete {
                let tau = if before + room >= threshold {
                    ((threshold - before) / arrival).clamp(0.0, dt)
                } else {
                    ((media - sent_before) / arrival).clamp(0.0, dt)
                };
                let at = t + tau;
                playing = true;
                if started {
                    stalls.push((stall_start.take()?, at));
                } else {
                    started = true;
                    t_init = Some(at);
                }
                played += (enc * (dt - tau)).min(sent - played);
            }
        }
    }
    None
}

/// Draws a finishable scenario: the final trace segment always carries at
/// least half the encoding rate.
pub fn random_scenario<R: rand::Rng>(rng: &mut R) -> Scenario {
    let duration = rng.random_range(10.0..40.0);
    let enc: f64 = rng.random_range(20_000.0..200_000.0);
    let media_size = enc * duration;
    let startup: f64 = enc * rng.random_range(1.0..5.0);
    let resume = enc * rng.random_range(0.5..5.0);
    let capacity = rng
        .random_bool(0.3)
        .then(|| startup.max(resume) * rng.random_range(1.5..4.0));

    let n = rng.random_range(1..=4);
    let mut starts: Vec<f64> = (1..n)
        .map(|_| rng.random_range(1..(duration * 2000.0) as u64) as f64 / 1000.0)
        .collect();
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup();
    starts.insert(0, 0.0);
    let last = starts.len() - 1;
    let segments = starts
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let f = if i == last {
                rng.random_range(0.5..2.0)
            } else {
                rng.random_range(0.2..2.0)
            };
            (s, enc * f)
        })
        .collect();

    Scenario {
        segments,
        media_size,
        duration,
        throttle_factor: rng.random_range(1.0..1.5),
        initial_burst: media_size * rng.random_range(0.0..0.5),
        startup,
        resume,
        capacity,
    }
}
