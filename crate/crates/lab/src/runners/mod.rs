//! One runner per scenario family.

mod eikonal;
mod evolve;
mod localmotion;
mod localtime;
mod partition;
mod propdecay;
mod uncertainty;
mod waveop;
mod xsection;

use crate::report::Outcome;
use crate::scenario::{Family, PotentialKind, PotentialSpec, Scenario};
use scatterlab_core::potentials::PairPotential;
use std::fmt;

/// A core computation failed; `context` says which step.
#[derive(Debug)]
pub struct Failure {
    pub context: String,
    pub source: scatterlab_core::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.source)
    }
}

pub type Res<T> = Result<T, Failure>;

pub(crate) trait Context<T> {
    fn ctx(self, context: &str) -> Res<T>;
}

impl<T> Context<T> for scatterlab_core::Result<T> {
    fn ctx(self, context: &str) -> Res<T> {
        self.map_err(|source| Failure { context: context.to_string(), source })
    }
}

/// Dispatches a validated scenario to its family runner.
pub fn run_family(s: &Scenario, threads: usize) -> Res<Outcome> {
    let seed = s.seed();
    match s.family() {
        Family::Evolve => evolve::run(s.evolve.as_ref().expect("family section"), seed),
        Family::LocalTime => localtime::run(s.localtime.as_ref().expect("family section"), seed),
        Family::PropDecay => propdecay::run(s.propdecay.as_ref().expect("family section"), seed),
        Family::WaveOp => waveop::run(s.waveop.as_ref().expect("family section"), seed),
        Family::Eikonal => eikonal::run(s.eikonal.as_ref().expect("family section"), seed, threads),
        Family::Partition => partition::run(s.partition.as_ref().expect("family section"), seed),
        Family::Uncertainty => uncertainty::run(s.uncertainty.as_ref().expect("family section"), seed),
        Family::XSection => xsection::run(s.xsection.as_ref().expect("family section")),
        Family::LocalMotion => localmotion::run(s.localmotion.as_ref().expect("family section")),
    }
}

pub(crate) fn pair_potential(p: &PotentialSpec) -> PairPotential {
    match p.kind {
        PotentialKind::Zero => PairPotential::zero(),
        PotentialKind::Gaussian => PairPotential::gaussian(p.strength, p.width),
        PotentialKind::SoftCoulomb => PairPotential::soft_coulomb(p.strength, p.width),
    }
}

/// Runs `f` over `items` on up to `threads` scoped threads, keeping order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
