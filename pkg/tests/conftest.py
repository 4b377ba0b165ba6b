import numpy as np
import pytest

from seqhash import dataset, pipeline


@pytest.fixture(scope="session")
def small_recipe():
    return dataset.DatasetRecipe(
        ref_count_a=1500,
        ref_count_b=1500,
        query_count_b=1500,
        window_w=40,
        noise_scale=1.0,
        seed=42,
        target_dims=24,
    )


@pytest.fixture(scope="session")
def small_dataset(small_recipe):
    return dataset.build_recipe(small_recipe)


@pytest.fixture(scope="session")
def small_pipeline(small_dataset):
    """Trained pipeline on a 3K-row dataset: (model, qz, idx, ref_proj, query_digits)."""
    from seqhash import quantizer, transform

    reference, query, _ = small_dataset
    model, qz, idx, ref_proj = pipeline.train_pipeline(reference, 12, 2)
    query_proj = transform.project(model, query)
    query_digits = quantizer.quantize_batch(qz, query_proj.data.astype(np.float64))
    return model, qz, idx, ref_proj, query_digits
