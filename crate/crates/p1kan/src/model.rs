use p1kan_core::{Matrix, Mlp, P1KanNetwork, Regressor, Result};

/// Either kind of trainable model the harness knows how to run and persist.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    P1Kan(P1KanNetwork),
    Mlp(Mlp),
}

impl Model {
    pub fn widths(&self) -> Vec<usize> {
        match self {
            Model::P1Kan(net) => net.widths(),
            Model::Mlp(net) => net.widths().to_vec(),
        }
    }

    pub fn count_params(&self) -> usize {
        match self {
            Model::P1Kan(net) => net.count_params(),
            Model::Mlp(net) => net.count_params(),
        }
    }

    fn inner(&self) -> &dyn Regressor {
        match self {
            Model::P1Kan(net) => net,
            Model::Mlp(net) => net,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Regressor {
        match self {
            Model::P1Kan(net) => net,
            Model::Mlp(net) => net,
        }
    }
}

impl Regressor for Model {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn output_dim(&self) -> usize {
        self.inner().output_dim()
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.inner().predict(x)
    }

    fn loss_and_grads(&self, x: &Matrix, target: &Matrix) -> Result<(f64, Vec<Vec<f64>>)> {
        self.inner().loss_and_grads(x, target)
    }

    fn parameters(&self) -> Vec<&[f64]> {
        self.inner().parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.inner_mut().parameters_mut()
    }

    fn parameter_names(&self) -> Vec<String> {
        self.inner().parameter_names()
    }

    fn after_update(&mut self) {
        self.inner_mut().after_update()
    }
}
