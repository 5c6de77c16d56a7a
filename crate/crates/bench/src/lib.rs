//! Benchmark fixtures.

use bubble_core::grid::make_initial_data;
use bubble_core::{FluidParams, Grid, InitSpec, Mode, SimState, SolverConfig};

pub struct Fixture {
    pub grid: Grid,
    pub params: FluidParams,
    pub cfg: SolverConfig,
    pub state: SimState,
}

/// A nonlinear bump on a 64-wide grid with `cells` cells.
pub fn bump(cells: usize) -> Fixture {
    let grid = Grid::with_cells(64.0, cells).expect("grid");
    let params = FluidParams::default();
    let spec = InitSpec::QBump {
        amplitude: 1e-2,
        center: 8.0,
        width: 1.5,
    };
    let state = make_initial_data(&spec, &grid, &params, Mode::Nonlinear).expect("initial data");
    Fixture {
        grid,
        params,
        cfg: SolverConfig::default(),
        state,
    }
}
