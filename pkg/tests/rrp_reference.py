"""Literal reference implementation of recursive random projection regression.

Straight-line transcription of the published procedure: dict-based nodes,
explicit loops, no vectorization. Kept deliberately independent of
flowcast.models.rrp so the two can be compared node-for-node; the only
shared pieces are the pinned PCG64 generator and the uniform pivot draw,
which are part of the algorithm's seeded contract.
"""

import math
import statistics

import numpy as np


class RandomProjectionRegression:
    def __init__(self, data, stop_depth, target_index, seed):
        self.data = np.asarray(data, dtype=float)
        self.stop_depth = stop_depth
        self.target_index = target_index
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.tree = self.build_tree(self.data, stop_depth)

    def build_tree(self, candidates, enough):
        if not isinstance(candidates, np.ndarray):
            candidates = np.asarray(candidates, dtype=float)
        if len(candidates) <= enough:
            median_value = statistics.median(candidates[:, self.target_index].tolist())
            return {"type": "leaf", "median": median_value}
        east_pivot, west_pivot, east_items, west_items = self.split(candidates)
        return {
            "type": "node",
            "east_pivot": east_pivot,
            "west_pivot": west_pivot,
            "east_child": self.build_tree(east_items, enough),
            "west_child": self.build_tree(west_items, enough),
        }

    def split(self, candidates):
        pivot = candidates[int(self.rng.integers(0, len(candidates)))]
        east_pivot = self.find_farest(pivot, candidates)
        west_pivot = self.find_farest(east_pivot, candidates)
        distance_c = self.calculate_distance(east_pivot, west_pivot)

        if distance_c == 0:
            mid_point = len(candidates) // 2
            return east_pivot, west_pivot, candidates[:mid_point], candidates[mid_point:]

        all_distance = []
        for candidate in candidates:
            distance_a = self.calculate_projection_distance(
                candidate, west_pivot, east_pivot, distance_c
            )
            all_distance.append((distance_a, candidate))

        all_distance.sort(key=lambda item: item[0])
        mid_point = len(all_distance) // 2
        east_items = np.array([item[1] for item in all_distance[:mid_point]])
        west_items = np.array([item[1] for item in all_distance[mid_point:]])
        return east_pivot, west_pivot, east_items, west_items

    def predict(self):
        predictions = []
        for row in self.data:
            predictions.append(self.localize_and_predict(np.asarray(row), self.tree))
        return predictions

    def localize_and_predict(self, data_point, node):
        if node["type"] == "leaf":
            return node["median"]
        if (self.calculate_distance(data_point, node["east_pivot"])
                < self.calculate_distance(data_point, node["west_pivot"])):
            return self.localize_and_predict(data_point, node["east_child"])
        return self.localize_and_predict(data_point, node["west_child"])

    @staticmethod
    def find_farest(pivot, candidates):
        max_distance = 0
        farest_point = pivot
        for candidate in candidates:
            distance = RandomProjectionRegression.calculate_distance(pivot, candidate)
            if distance > max_distance:
                max_distance = distance
                farest_point = candidate
        return farest_point

    @staticmethod
    def calculate_distance(p1, p2):
        return math.sqrt(sum((v1 - v2) ** 2 for v1, v2 in zip(p1, p2)))

    @staticmethod
    def calculate_projection_distance(candidate, west_pivot, east_pivot, c):
        distance_a = RandomProjectionRegression.calculate_distance(candidate, west_pivot)
        distance_b = RandomProjectionRegression.calculate_distance(candidate, east_pivot)
        return (distance_a ** 2 + c ** 2 - distance_b ** 2) / (2 * c)
