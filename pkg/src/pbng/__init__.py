"""Parallel butterfly peeling: wing and tip decomposition of bipartite graphs."""
from .baseline import bup_tip, bup_wing, extract_k_level
from .bloom import (BloomEdgeIndex, IndexBudgetError, PlanIntegrityError, build_be_index,
                    partition_be_index)
from .coarse import (DegenerateRangeError, PartitionPlan, PeelFrontier, adaptive_target,
                     cd_tip, cd_wing, find_range)
from .counting import ButterflyCounts, count_butterflies, counting_bound, wedge_work
from .fine import (ScheduleTrace, TaskQueue, fd_tip, fd_wing, schedule, tip_decomposition,
                   wing_decomposition)
from .graph import (BipartiteGraph, EmptyGraphError, GraphFormatError, VertexSide,
                    assign_priorities, delete_edges, from_edges, induced_subgraph,
                    load_edge_list, priority_order)
from .oracle import (ButterflyList, enumerate_butterflies, oracle_entity_numbers,
                     verify_hierarchy)
from .results import DecompositionResult, RunMetrics

__all__ = [name for name in dir() if not name.startswith("_")]
