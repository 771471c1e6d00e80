//! Seeded random-waypoint mobility.
//!
//! Every vehicle starts at a uniform point, picks a uniform destination and a
//! uniform speed, moves in a straight line each tick and re-picks both on
//! arrival. Journeys begin and end at staggered ticks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TraceSample;
use crate::model::{Area, Point, VehicleId};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct SyntheticParams<T> {
    pub area: Area<T>,
    /// Sampling period, s.
    pub tick: T,
    /// m/s
    pub speed_min: T,
    /// m/s
    pub speed_max: T,
    /// Fraction of the horizon over which journey starts (and ends) are spread.
    pub stagger: T,
}

impl<T: Real> Default for SyntheticParams<T> {
    fn default() -> Self {
        SyntheticParams {
            area: Area::default(),
            tick: T::one(),
            speed_min: T::lit(3.0),
            speed_max: T::lit(14.0),
            stagger: T::lit(0.05),
        }
    }
}

struct Walker<T> {
    pos: Point<T>,
    dest: Point<T>,
    speed: T,
    first: usize,
    last: usize,
}

fn uniform<T: Real>(rng: &mut ChaCha8Rng, lo: T, hi: T) -> T {
    if hi > lo {
        T::lit(rng.gen_range(lo.as_f64()..hi.as_f64())).max(lo).min(hi)
    } else {
        lo
    }
}

fn point<T: Real>(rng: &mut ChaCha8Rng, area: &Area<T>) -> Point<T> {
    area.clamp(Point::new(
        uniform(rng, T::zero(), area.width),
        uniform(rng, T::zero(), area.height),
    ))
}

/// Samples at `tick, 2*tick, ..` up to `horizon`, ordered by time then by
/// vehicle index. Vehicle ids are `veh0`, `veh1`, ...
pub fn generate_synthetic<T: Real>(
    params: &SyntheticParams<T>,
    vehicle_count: usize,
    horizon: T,
    seed: u64,
) -> Vec<TraceSample<T>> {
    let ticks = (horizon / params.tick).floor().to_usize().unwrap_or(0);
    if ticks == 0 || vehicle_count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = (params.stagger * T::from_usize(ticks).unwrap_or_else(T::zero))
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(ticks - 1);
    let area = params.area;

    let mut walkers: Vec<Walker<T>> = (0..vehicle_count)
        .map(|_| {
            let first = 1 + rng.gen_range(0..=spread);
            let last = (ticks - rng.gen_range(0..=spread)).max(first);
            Walker {
                pos: point(&mut rng, &area),
                dest: point(&mut rng, &area),
                speed: uniform(&mut rng, params.speed_min, params.speed_max),
                first,
                last,
            }
        })
        .collect();
    let ids: Vec<VehicleId> = (0..vehicle_count).map(|v| VehicleId(format!("veh{v}"))).collect();

    let mut out = Vec::with_capacity(ticks * vehicle_count);
    for k in 1..=ticks {
        let time = params.tick * T::from_usize(k).unwrap_or_else(T::zero);
        for (v, w) in walkers.iter_mut().enumerate() {
            if k < w.first || k > w.last {
                continue;
            }
            if k > w.first {
                let step = w.speed * params.tick;
                let remaining = w.pos.distance(&w.dest);
                if step >= remaining {
                    w.pos = w.dest;
                    w.dest = point(&mut rng, &area);
                    w.speed = uniform(&mut rng, params.speed_min, params.speed_max);
                } else {
                    let f = step / remaining;
                    w.pos = area.clamp(Point::new(
                        w.pos.x + (w.dest.x - w.pos.x) * f,
                        w.pos.y + (w.dest.y - w.pos.y) * f,
                    ));
                }
            }
            out.push(TraceSample {
                time,
                vehicle_id: ids[v].clone(),
                position: w.pos,
                speed: Some(w.speed),
            });
        }
    }
    out
}
