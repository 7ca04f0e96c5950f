DEFAULT_PIPELINE_PARAMS = {
    "input": {
        "ct": None,
        "organs": {},
        "label_volume": None,
        "label_table": None,
        "intestine": ["duodenum", "small_bowel", "colon"],
        "dilation_vox": {},
        "analysis_mask": None,
        "roi": None
    }
    ,
    "output": {
        "dir": "./autocomb_out",
        "dump_intermediates": False,
        "dump_scales": False
    }
    ,
    "hu": {
        "lo": -200.0,
        "hi": 350.0
    }
    ,
    "organ_removal": {
        "blur_sigma_mm": 2.0,
        "fill_value": -200.0,
        "body_threshold_hu": -500.0
    }
    ,
    "gmm": {
        "k": 4,
        "bin_width": 1.0,
        "seed": 0,
        "tol": 1e-6,
        "max_iter": 500,
        "restarts": 3,
        "min_voxels": 1000,
        "bic_penalty": "full_params",
        "k_min": 1,
        "k_max": 9
    }
    ,
    "vesselness": {
        "scales_mm": [1.0, 1.5, 2.0, 2.5],
        "tau_cut": 0.5
    }
    ,
    "enhance": {
        "K": 3,
        "lambda_schedule": [0.5],
        "tau_percent": 5.0,
        "min_floor": 0.01
    }
    ,
    "fusion": {
        "sigma_wall_mm": 5.0,
        "roi_distance_mm": 15.0,
        "theta": 0.05
    }
}

# Config keys holding file paths, resolved against the config file's directory.
PATH_KEYS = {
    "input": ["ct", "label_volume", "label_table", "analysis_mask", "roi"],
    "output": ["dir"],
}

# Free-form tables whose keys are organ names rather than config fields.
OPEN_TABLES = [("input", "organs"), ("input", "dilation_vox")]

ARTIFACT_NAMES = {
    "intestine_mask": "intestine_mask.nii.gz",
    "intestine_volume": "intestine_volume.nii.gz",
    "removal_mask": "removal_mask.nii.gz",
    "exclusion_mask": "exclusion_mask.nii.gz",
    "analysis_mask": "analysis_mask.nii.gz",
    "gmm": "gmm.json",
    "bic": "bic.csv",
    "threshold": "threshold.json",
    "histogram": "histogram.csv",
    "wall_mask": "wall_mask.nii.gz",
    "organ_removed": "organ_removed.nii.gz",
    "vesselness": "vesselness.nii.gz",
    "enhanced": "enhanced.nii.gz",
    "proximity": "proximity.nii.gz",
    "comb": "comb.nii.gz",
    "report": "report.json",
}
