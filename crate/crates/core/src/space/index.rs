//! Arch-id keyed cell/encoding lookup shared by predictors and search.

use std::collections::BTreeMap;

use super::cell::{CellGraph, Space};
use super::encode::{encode, EncodedGraph};
use super::{parse_arch_string, SpaceError};

/// Cells and their encodings, keyed by arch id.
///
/// NB-201 indices can be built straight from arch ids (the id is the
/// architecture string); NB-101 requires the external cell list.
#[derive(Debug, Clone)]
pub struct CellIndex {
    pub space: Space,
    cells: BTreeMap<String, (CellGraph, EncodedGraph)>,
}

impl CellIndex {
    pub fn from_cells(space: Space, cells: impl IntoIterator<Item = CellGraph>) -> Self {
        let cells = cells
            .into_iter()
            .map(|c| {
                let g = encode(&c);
                (c.arch_id.clone(), (c, g))
            })
            .collect();
        CellIndex { space, cells }
    }

    /// Builds the index by parsing NB-201 arch ids.
    pub fn from_nb201_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<Self, SpaceError> {
        let mut cells = BTreeMap::new();
        for id in ids {
            let cell = parse_arch_string(id)?;
            let graph = encode(&cell);
            cells.insert(id.to_string(), (cell, graph));
        }
        Ok(CellIndex {
            space: Space::Nb201,
            cells,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, arch_id: &str) -> Option<&CellGraph> {
        self.cells.get(arch_id).map(|(c, _)| c)
    }

    pub fn graph(&self, arch_id: &str) -> Option<&EncodedGraph> {
        self.cells.get(arch_id).map(|(_, g)| g)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CellGraph, &EncodedGraph)> {
        self.cells.iter().map(|(id, (c, g))| (id.as_str(), c, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::enumerate_space;

    #[test]
    fn builds_from_ids_and_round_trips() {
        let ids: Vec<String> = enumerate_space(Space::Nb201)
            .unwrap()
            .step_by(2000)
            .map(|c| c.arch_id)
            .collect();
        let index = CellIndex::from_nb201_ids(ids.iter().map(String::as_str)).unwrap();
        assert_eq!(index.len(), ids.len());
        for id in &ids {
            assert_eq!(index.cell(id).unwrap().arch_id, *id);
            assert_eq!(index.graph(id).unwrap().n(), 9);
        }
    }
}
