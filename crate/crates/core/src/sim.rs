//! The managed-system boundary and a scripted simulator implementing it.

use crate::engine::AdaptationResponse;
use crate::state::{AttributeValue, SystemState};

/// What the mediator needs from a managed system: a readable attribute
/// snapshot and a way to execute a corrective state. After `apply`,
/// `read_state` agrees with the response on every attribute until something
/// perturbs it again.
pub trait ManagedSystem {
    fn read_state(&self) -> SystemState;
    fn apply(&mut self, response: &AdaptationResponse);
}

/// A scripted stand-in for a real managed system: it simply reports whatever
/// state it was last given. Scenario events perturb individual attributes,
/// including dropping them to `Uncertain` to model sensor loss.
#[derive(Debug, Clone)]
pub struct SimulatedSystem {
    state: SystemState,
}

impl SimulatedSystem {
    pub fn new(initial: SystemState) -> Self {
        SimulatedSystem { state: initial }
    }

    pub fn perturb(&mut self, attribute: &str, value: AttributeValue) {
        self.state.set(attribute, value);
    }
}

impl ManagedSystem for SimulatedSystem {
    fn read_state(&self) -> SystemState {
        self.state.clone()
    }

    fn apply(&mut self, response: &AdaptationResponse) {
        self.state = response.state.clone();
    }
}
