//! Domain types, manifest and image-map ingestion, and the EMB1 codec.

mod dataset;
mod emb;
mod graph;
mod ids;

pub use dataset::{read_image_map, ClassId, Dataset, ImageMap, RelationIndex};
pub use emb::{read_embeddings, write_embeddings, EmbeddingRecord, EmbeddingStore, EMB_MAGIC, EMB_VERSION};
pub use graph::{parse_manifest, read_manifest, GraphBuilder, IdentityGraph, SubjectMeta, MANIFEST_HEADER};
pub use ids::{ImageId, PairClass, SubjectId, TwinKind};

pub(crate) use graph::csv_result;

/// Load and join the three dataset inputs.
pub fn load_dataset(
    manifest: &std::path::Path,
    image_map: &std::path::Path,
    embeddings: &std::path::Path,
) -> crate::Result<Dataset> {
    let graph = read_manifest(manifest)?;
    let map = read_image_map(image_map)?;
    let store = read_embeddings(embeddings)?;
    Dataset::join(graph, &map, &store)
}
