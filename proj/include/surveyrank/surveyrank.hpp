#pragma once

#include "surveyrank/common.hpp"
#include "surveyrank/csv.hpp"
#include "surveyrank/efa.hpp"
#include "surveyrank/lcca.hpp"
#include "surveyrank/mcdm.hpp"
#include "surveyrank/pipeline.hpp"
#include "surveyrank/psychometrics.hpp"
#include "surveyrank/rank_agg.hpp"
#include "surveyrank/report.hpp"
#include "surveyrank/simulate.hpp"
#include "surveyrank/special_functions.hpp"
#include "surveyrank/survey_data.hpp"
