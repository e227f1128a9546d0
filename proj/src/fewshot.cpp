#include "ragmat/pipeline.hpp"

namespace ragmat::pipeline {

const std::vector<FewShotExample>& default_few_shot_examples() {
  static const std::vector<FewShotExample> examples = {
      {"Can you explain how to lift properly to avoid excessive strain on the back?",
       "**Safe Lifting Tips:** \n"
       "1. **Get Close:** Keep the item close to your body.\n"
       "2. **Bend at the Knees:** Bend your hips and knees, not your back.\n"
       "3. **Breathe:** Don't hold your breath.\n"
       "4. **Lift with Your Legs:** Use your leg muscles.\n"
       "5. **Pivot:** Move your feet, avoid twisting your back."},
      {"How can a patient set up their desk ergonomically?",
       "**Ergonomic Desk Setup Tips:** \n"
       "1. **Chair:** Support your back, knees level with hips, feet flat.\n"
       "2. **Desk:** Adequate space for legs and feet.\n"
       "3. **Monitor:** Arm's length away, eye level.\n"
       "4. **Keyboard and Mouse:** Wrists straight, hands below elbow level.\n"
       "5. **Movement:** Move around at least once per hour."},
  };
  return examples;
}

std::string default_system_prompt() {
  return "You are a physical therapist who writes patient education materials for people with "
         "low back pain. Write directly to the patient in plain, friendly language, use short "
         "sentences, and tailor the advice to the patient's work, activity level, exercise "
         "routine, and beliefs. When reference material is supplied in the CONTEXT block below, "
         "base your advice only on that material and do not add claims it does not support.";
}

}  // namespace ragmat::pipeline
