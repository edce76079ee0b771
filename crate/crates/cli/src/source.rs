use corrgeom::model::{CirclePlaneWaves, LatticeBoundary, ModelFile};
use corrgeom::{circle_trig_pair, lattice_dirac_sea, torus_tetrads, EffectiveModel, LatticeDiracModel};

use crate::args::{Boundary, Builtin, BuiltinArgs, SourceArgs};
use crate::report::{CmdResult, Failure, Run};

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::CirclePlaneWaves => "circle-plane-waves",
            Builtin::CircleTrigPair => "circle-trig-pair",
            Builtin::TorusTetrads => "torus-tetrads",
            Builtin::LatticeDiracSea => "lattice-dirac-sea",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Builtin::CirclePlaneWaves => 16,
            Builtin::CircleTrigPair => 64,
            Builtin::TorusTetrads => 4,
            Builtin::LatticeDiracSea => 16,
        }
    }
}

impl BuiltinArgs {
    pub fn n_or_default(&self, which: Builtin) -> usize {
        match which {
            Builtin::LatticeDiracSea => self.sites,
            _ => self.n.unwrap_or(which.default_n()),
        }
    }

    pub fn kmax(&self) -> usize {
        self.kmax.unwrap_or(1)
    }

    pub fn lattice(&self, sites: usize) -> LatticeDiracModel {
        let boundary = match self.boundary {
            Boundary::Periodic => LatticeBoundary::Periodic,
            Boundary::Antiperiodic => LatticeBoundary::Antiperiodic,
        };
        LatticeDiracModel::new(sites, self.spacing, self.mass, self.charge).with_boundary(boundary)
    }

    pub fn m_fields(&self, sites: usize) -> usize {
        self.m_fields.unwrap_or(sites / 2)
    }

    /// Build `which` with `n` substituted for its size parameter.
    pub fn build_sized(&self, which: Builtin, n: usize) -> corrgeom::Result<EffectiveModel> {
        match which {
            Builtin::CirclePlaneWaves => CirclePlaneWaves::new(n, self.kmax()).radius(self.radius).build(),
            Builtin::CircleTrigPair => circle_trig_pair(n),
            Builtin::TorusTetrads => torus_tetrads(n),
            Builtin::LatticeDiracSea => lattice_dirac_sea(&self.lattice(n), self.m_fields(n)),
        }
    }

    /// Record the parameters that `which` actually uses.
    pub fn record(&self, which: Builtin, run: &mut Run) {
        run.param("builtin", which.name());
        match which {
            Builtin::CirclePlaneWaves => {
                run.param("n", self.n_or_default(which));
                run.param("kmax", self.kmax());
                run.param("radius", self.radius);
            }
            Builtin::CircleTrigPair | Builtin::TorusTetrads => run.param("n", self.n_or_default(which)),
            Builtin::LatticeDiracSea => {
                run.param("sites", self.sites);
                run.param("m_fields", self.m_fields(self.sites));
                run.param("mass", self.mass);
                run.param("charge", self.charge);
                run.param("spacing", self.spacing);
                run.param("boundary", format!("{:?}", self.boundary).to_lowercase());
            }
        }
    }
}

/// The model named on the command line, plus the builtin it came from.
pub fn load_model(source: &SourceArgs, run: &mut Run) -> CmdResult<(EffectiveModel, Option<Builtin>)> {
    match (&source.model, source.builtin.builtin) {
        (Some(path), None) => {
            let text = run.read(path)?;
            let file = ModelFile::parse(&text)?;
            Ok((file.into_model()?, None))
        }
        (None, Some(which)) => {
            source.builtin.record(which, run);
            let n = source.builtin.n_or_default(which);
            Ok((source.builtin.build_sized(which, n)?, Some(which)))
        }
        _ => Err(Failure::usage("give either a model file or --builtin")),
    }
}
