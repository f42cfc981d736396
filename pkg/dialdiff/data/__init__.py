from dialdiff.data.dataset_io import (
    ImageSet,
    SplitManifest,
    read_image_set,
    read_split_manifest,
    write_dataset,
    write_image_set,
)
from dialdiff.data.image_codec import decode_image, encode_image, image_grid
from dialdiff.data.photochat import LoadedCorpus, convert_photochat_export, load_photochat
from dialdiff.data.shapetalk import ShapeTalkSample, gen_shapetalk, render_scene, sample_scene_images

__all__ = [
    "ImageSet",
    "LoadedCorpus",
    "ShapeTalkSample",
    "SplitManifest",
    "convert_photochat_export",
    "decode_image",
    "encode_image",
    "gen_shapetalk",
    "image_grid",
    "load_photochat",
    "read_image_set",
    "read_split_manifest",
    "render_scene",
    "sample_scene_images",
    "write_dataset",
    "write_image_set",
]
