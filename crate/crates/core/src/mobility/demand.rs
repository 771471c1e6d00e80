use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Trace;
use crate::model::{RequestSnapshot, ServiceId, ServiceRequest, VehicleId};
use crate::scalar::Real;

/// Which service each vehicle currently requests.
///
/// Subscriptions start uniform at random; each [`advance`](Self::advance)
/// lets every vehicle resample its service with probability `churn_rate`.
#[derive(Debug, Clone)]
pub struct DemandProfile {
    subscription: BTreeMap<VehicleId, ServiceId>,
    service_count: usize,
    churn_rate: f64,
    rng: ChaCha8Rng,
}

impl DemandProfile {
    pub fn uniform(
        vehicles: impl IntoIterator<Item = VehicleId>,
        service_count: usize,
        churn_rate: f64,
        seed: u64,
    ) -> Self {
        assert!(service_count > 0, "demand needs at least one service");
        assert!((0.0..=1.0).contains(&churn_rate), "churn rate must be a probability");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Separate stream from the mobility generator, which may share the seed.
        rng.set_stream(1);
        let subscription = vehicles
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|v| (v, ServiceId(rng.gen_range(0..service_count))))
            .collect();
        DemandProfile {
            subscription,
            service_count,
            churn_rate,
            rng,
        }
    }

    pub fn fixed(subscription: BTreeMap<VehicleId, ServiceId>, service_count: usize) -> Self {
        DemandProfile {
            subscription,
            service_count,
            churn_rate: 0.0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn service_of(&self, vehicle: &VehicleId) -> Option<ServiceId> {
        self.subscription.get(vehicle).copied()
    }

    pub fn subscriptions(&self) -> &BTreeMap<VehicleId, ServiceId> {
        &self.subscription
    }

    pub fn churn_rate(&self) -> f64 {
        self.churn_rate
    }

    /// One tick of churn, in vehicle-id order.
    pub fn advance(&mut self) {
        if self.churn_rate <= 0.0 {
            return;
        }
        for service in self.subscription.values_mut() {
            if self.rng.gen::<f64>() < self.churn_rate {
                *service = ServiceId(self.rng.gen_range(0..self.service_count));
            }
        }
    }
}

/// Requests of every vehicle present in the trace at `time`.
///
/// Vehicles without a subscription, or with a service id outside
/// `0..service_count`, are skipped; repeated samples of a vehicle at the same
/// time count once.
pub fn snapshot_at<T: Real>(
    trace: &Trace<T>,
    time: T,
    profile: &DemandProfile,
    service_count: usize,
) -> RequestSnapshot<T> {
    let mut seen = BTreeSet::new();
    let requests: Vec<ServiceRequest<T>> = trace
        .at(time)
        .iter()
        .filter_map(|s| {
            let service = profile.service_of(&s.vehicle_id)?;
            (service.0 < service_count && seen.insert(&s.vehicle_id)).then(|| ServiceRequest {
                vehicle_id: s.vehicle_id.clone(),
                location: s.position,
                time,
                service_id: service,
            })
        })
        .collect();
    RequestSnapshot::new(time, service_count, requests).expect("requests are built consistent with the snapshot")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{generate_synthetic, SyntheticParams, TraceSample};
    use crate::model::Point;

    fn trace() -> Trace<f64> {
        let p = SyntheticParams {
            stagger: 0.0,
            ..Default::default()
        };
        Trace::new(generate_synthetic(&p, 100, 20.0, 5)).unwrap()
    }

    #[test]
    fn partition_sums_to_active_vehicles() {
        let tr = trace();
        let prof = DemandProfile::uniform(tr.vehicle_ids(), 6, 0.02, 9);
        let snap = snapshot_at(&tr, 3.0, &prof, 6);
        assert_eq!(snap.total_requests(), 100);
        assert_eq!(snap.demand().total(), 100);
        assert!(snap.iter().all(|r| r.time == 3.0));
    }

    #[test]
    fn zero_churn_keeps_subscriptions() {
        let tr = trace();
        let mut prof = DemandProfile::uniform(tr.vehicle_ids(), 6, 0.0, 9);
        let before = prof.subscriptions().clone();
        for _ in 0..50 {
            prof.advance();
        }
        assert_eq!(&before, prof.subscriptions());
    }

    #[test]
    fn churn_changes_something_and_is_seeded() {
        let tr = trace();
        let mut a = DemandProfile::uniform(tr.vehicle_ids(), 6, 0.2, 9);
        let mut b = DemandProfile::uniform(tr.vehicle_ids(), 6, 0.2, 9);
        let start = a.subscriptions().clone();
        for _ in 0..10 {
            a.advance();
            b.advance();
        }
        assert_eq!(a.subscriptions(), b.subscriptions());
        assert_ne!(&start, a.subscriptions());
    }

    #[test]
    fn absent_vehicle_not_in_snapshot() {
        let s = |t: f64, v: &str| TraceSample {
            time: t,
            vehicle_id: v.into(),
            position: Point::new(1.0, 1.0),
            speed: None,
        };
        let tr = Trace::new(vec![s(1.0, "a"), s(1.0, "b"), s(2.0, "a")]).unwrap();
        let prof = DemandProfile::uniform(tr.vehicle_ids(), 3, 0.0, 1);
        let snap = snapshot_at(&tr, 2.0, &prof, 3);
        assert_eq!(snap.total_requests(), 1);
        assert_eq!(snap.iter().next().unwrap().vehicle_id, VehicleId::from("a"));
        assert_eq!(snapshot_at(&tr, 7.0, &prof, 3).total_requests(), 0);
    }
}
