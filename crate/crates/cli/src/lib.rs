//! Library surface of the `kfusion` CLI: the instance file model is exposed
//! so integration tests can exercise serialization directly.

pub mod model;
