from .phantoms import (cylinder_volume, quadratic_volume, random_probability, random_mask, point_mask,
                       mixture_samples, samples_volume, mixture_histogram, jacobi_eigenvalues)
